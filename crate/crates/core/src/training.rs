//! Feature/target assembly and readout training.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{FeatureError, Featurizer, NgrcConfig};
use crate::predictor::TrainedModel;
use crate::ridge::{RidgeAccumulator, RidgeError, RidgeMethod};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

/// Feature vectors as columns (Ñ × columns).
pub type FeatureMatrix<T> = DMatrix<T>;
/// State increments as columns (d × columns).
pub type TargetMatrix<T> = DMatrix<T>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainingError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Ridge(#[from] RidgeError),
    #[error("trajectory has {got} states, at least {needed} are required")]
    TooShort { needed: usize, got: usize },
    #[error("training set is empty")]
    EmptySet,
    #[error("sample {index} is inconsistent with the first sample: {reason}")]
    Inconsistent { index: usize, reason: String },
    #[error("non-finite value in training data of sample {0}")]
    NonFinite(usize),
    #[error("model file is inconsistent: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample<T> {
    pub trajectory: Trajectory<T>,
    pub theta: T,
}

/// Stationary trajectories, each recorded at its own bifurcation parameter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet<T> {
    pub samples: Vec<TrainingSample<T>>,
}

impl<T: Scalar> TrainingSet<T> {
    pub fn new(samples: Vec<TrainingSample<T>>) -> Self {
        Self { samples }
    }

    pub fn thetas(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.theta).collect()
    }

    pub fn validate(&self) -> Result<(), TrainingError> {
        let first = self.samples.first().ok_or(TrainingError::EmptySet)?;
        let (dim, dt) = (first.trajectory.dim(), first.trajectory.dt());
        for (index, s) in self.samples.iter().enumerate() {
            if s.trajectory.dim() != dim {
                return Err(TrainingError::Inconsistent {
                    index,
                    reason: format!("dimension {} vs {dim}", s.trajectory.dim()),
                });
            }
            if s.trajectory.dt() != dt {
                return Err(TrainingError::Inconsistent {
                    index,
                    reason: format!("dt {} vs {dt}", s.trajectory.dt()),
                });
            }
            if !s.theta.is_finite() || s.trajectory.as_flat().iter().any(|v| !v.is_finite()) {
                return Err(TrainingError::NonFinite(index));
            }
        }
        Ok(())
    }
}

/// Columns a trajectory of `len` states contributes: one per index
/// `warmup ≤ i < len - 1`.
pub fn usable_columns(len: usize, warmup: usize) -> usize {
    len.saturating_sub(warmup + 1)
}

fn check_length(len: usize, warmup: usize) -> Result<(), TrainingError> {
    if len < warmup + 2 {
        return Err(TrainingError::TooShort {
            needed: warmup + 2,
            got: len,
        });
    }
    Ok(())
}

fn check_dim<T: Scalar>(traj: &Trajectory<T>, config: &NgrcConfig<T>) -> Result<(), TrainingError> {
    if traj.dim() != config.dim {
        return Err(FeatureError::DimensionMismatch {
            expected: config.dim,
            got: traj.dim(),
        }
        .into());
    }
    Ok(())
}

/// Feature column `j` is built at step `warmup + j` and paired with the
/// increment into step `warmup + j + 1`.
pub fn build_feature_matrix<T: Scalar>(
    traj: &Trajectory<T>,
    config: &NgrcConfig<T>,
    theta: T,
) -> Result<FeatureMatrix<T>, TrainingError> {
    let featurizer = Featurizer::new(config)?;
    check_dim(traj, config)?;
    let warmup = config.warmup();
    check_length(traj.len(), warmup)?;
    let cols = usable_columns(traj.len(), warmup);
    let mut out = DMatrix::zeros(featurizer.feature_dim(), cols);
    for (j, mut col) in out.column_iter_mut().enumerate() {
        featurizer.fill(traj.as_flat(), warmup + j, theta, col.as_mut_slice())?;
    }
    Ok(out)
}

/// Increments `Δx_{warmup+1}, …, Δx_{len-1}` as columns.
pub fn build_target_matrix<T: Scalar>(
    traj: &Trajectory<T>,
    warmup: usize,
) -> Result<TargetMatrix<T>, TrainingError> {
    check_length(traj.len(), warmup)?;
    let cols = usable_columns(traj.len(), warmup);
    Ok(DMatrix::from_fn(traj.dim(), cols, |a, j| {
        let i = warmup + j + 1;
        traj.state(i)[a] - traj.state(i - 1)[a]
    }))
}

/// Column-wise concatenation of every sample's feature and target matrices.
pub fn concat_multifunctional<T: Scalar>(
    set: &TrainingSet<T>,
    config: &NgrcConfig<T>,
) -> Result<(FeatureMatrix<T>, TargetMatrix<T>), TrainingError> {
    set.validate()?;
    let parts = set
        .samples
        .iter()
        .map(|s| {
            Ok((
                build_feature_matrix(&s.trajectory, config, s.theta)?,
                build_target_matrix(&s.trajectory, config.warmup())?,
            ))
        })
        .collect::<Result<Vec<_>, TrainingError>>()?;
    let total: usize = parts.iter().map(|p| p.0.ncols()).sum();
    let mut r = DMatrix::zeros(config.feature_dim(), total);
    let mut y = DMatrix::zeros(config.dim, total);
    let mut at = 0;
    for (f, t) in &parts {
        r.columns_mut(at, f.ncols()).copy_from(f);
        y.columns_mut(at, t.ncols()).copy_from(t);
        at += f.ncols();
    }
    Ok((r, y))
}

/// Where a readout came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingDescriptor<T> {
    pub thetas: Vec<T>,
    pub columns_per_sample: Vec<usize>,
    pub total_columns: usize,
    pub method: RidgeMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance<T> {
    /// SHA-256 of the architecture settings.
    pub config_hash: String,
    pub descriptor: TrainingDescriptor<T>,
}

/// Trained `W_out` (d × Ñ) with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutMatrix<T: Scalar> {
    pub w_out: DMatrix<T>,
    pub provenance: Provenance<T>,
}

impl<T: Scalar> ReadoutMatrix<T> {
    pub fn row_major(&self) -> Vec<T> {
        self.w_out.transpose().as_slice().to_vec()
    }

    pub fn from_row_major(
        rows: usize,
        cols: usize,
        values: &[T],
        provenance: Provenance<T>,
    ) -> Result<Self, TrainingError> {
        if values.len() != rows * cols {
            return Err(FeatureError::DimensionMismatch {
                expected: rows * cols,
                got: values.len(),
            }
            .into());
        }
        Ok(Self {
            w_out: DMatrix::from_row_slice(rows, cols, values),
            provenance,
        })
    }
}

/// Hex SHA-256 of a configuration's debug rendering (shortest round-trip floats).
pub fn config_hash<T: Scalar>(config: &NgrcConfig<T>) -> String {
    hex::encode(Sha256::digest(format!("{config:?}").as_bytes()))
}

/// On-disk form of a trained model: architecture, ordering tag, `W_out` in
/// row-major order and provenance. Floats are written in shortest
/// round-trip form, so loading reproduces the weights bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile<T> {
    pub config: NgrcConfig<T>,
    pub monomial_order: String,
    pub rows: usize,
    pub cols: usize,
    pub w_out: Vec<T>,
    pub provenance: Provenance<T>,
}

impl<T: Scalar> ModelFile<T> {
    pub fn from_model(model: &TrainedModel<T>) -> Self {
        let readout = model.readout();
        Self {
            config: model.config().clone(),
            monomial_order: model.config().monomial_order.as_str().to_string(),
            rows: readout.w_out.nrows(),
            cols: readout.w_out.ncols(),
            w_out: readout.row_major(),
            provenance: readout.provenance.clone(),
        }
    }

    pub fn into_model(self) -> Result<TrainedModel<T>, TrainingError> {
        if self.monomial_order != self.config.monomial_order.as_str() {
            return Err(TrainingError::Corrupt(format!(
                "monomial order tag {:?} does not match the config",
                self.monomial_order
            )));
        }
        if self.provenance.config_hash != config_hash(&self.config) {
            return Err(TrainingError::Corrupt("config hash mismatch".into()));
        }
        if self.w_out.iter().any(|v| !v.is_finite()) {
            return Err(TrainingError::Corrupt("non-finite weight".into()));
        }
        let readout = ReadoutMatrix::from_row_major(self.rows, self.cols, &self.w_out, self.provenance)?;
        Ok(TrainedModel::new(self.config, readout)?)
    }
}

const CHUNK_ROWS: usize = 2048;

fn accumulate_sample<T: Scalar>(
    featurizer: &Featurizer<T>,
    sample: &TrainingSample<T>,
    method: RidgeMethod,
) -> Result<RidgeAccumulator<T>, TrainingError> {
    let config = featurizer.config();
    let (n, d) = (featurizer.feature_dim(), config.dim);
    let warmup = config.warmup();
    let traj = &sample.trajectory;
    check_dim(traj, config)?;
    check_length(traj.len(), warmup)?;
    let flat = traj.as_flat();
    let mut acc = RidgeAccumulator::new(method, n, d);
    let mut buf = Vec::with_capacity(CHUNK_ROWS * (n + d));
    let mut rows = 0;
    for i in warmup..traj.len() - 1 {
        let at = buf.len();
        buf.resize(at + n + d, T::zero());
        featurizer.fill(flat, i, sample.theta, &mut buf[at..at + n])?;
        for a in 0..d {
            buf[at + n + a] = flat[(i + 1) * d + a] - flat[i * d + a];
        }
        rows += 1;
        if rows == CHUNK_ROWS || i + 2 == traj.len() {
            acc.absorb(&DMatrix::from_row_slice(rows, n + d, &buf));
            buf.clear();
            rows = 0;
        }
    }
    Ok(acc)
}

/// Trains a readout on every sample of `set` without materializing the
/// concatenated feature matrix. Samples are processed in parallel and merged
/// in set order, so the result does not depend on the thread count.
pub fn train<T: Scalar>(
    set: &TrainingSet<T>,
    config: &NgrcConfig<T>,
    method: RidgeMethod,
) -> Result<TrainedModel<T>, TrainingError> {
    set.validate()?;
    let featurizer = Featurizer::new(config)?;
    let parts = set
        .samples
        .par_iter()
        .map(|s| accumulate_sample(&featurizer, s, method))
        .collect::<Result<Vec<_>, _>>()?;
    let mut iter = parts.iter();
    let mut acc = iter.next().expect("set is non-empty").clone();
    for p in iter {
        acc.merge(p);
    }
    let w_out = acc.solve(config.beta)?;
    let columns_per_sample: Vec<usize> = set
        .samples
        .iter()
        .map(|s| usable_columns(s.trajectory.len(), config.warmup()))
        .collect();
    let readout = ReadoutMatrix {
        w_out,
        provenance: Provenance {
            config_hash: config_hash(config),
            descriptor: TrainingDescriptor {
                thetas: set.thetas(),
                total_columns: columns_per_sample.iter().sum(),
                columns_per_sample,
                method,
            },
        },
    };
    Ok(TrainedModel::new(config.clone(), readout)?)
}
