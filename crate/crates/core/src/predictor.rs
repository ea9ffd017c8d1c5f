//! Closed-loop NG-RC rollouts: `x_{i+1} = x_i + W_out q(P(L(x_i)) + γθ_i)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::collapse::detect_collapse;
use crate::collapse::{Collapse, CollapseRules};
use crate::features::{FeatureError, Featurizer, MonomialTable, NgrcConfig};
use crate::scalar::Scalar;
use crate::training::ReadoutMatrix;
use crate::trajectory::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictorError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("warm-up holds {got} states, the embedding needs {needed}")]
    WarmupTooShort { needed: usize, got: usize },
    #[error("schedule provides {got} values for {needed} steps")]
    ScheduleTooShort { needed: usize, got: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("prediction produced a non-finite state")]
    NonFinite,
    #[error("number of prediction steps must be at least 1")]
    ZeroSteps,
}

/// Architecture, monomial table and readout of a trained NG-RC.
#[derive(Debug, Clone)]
pub struct TrainedModel<T: Scalar> {
    featurizer: Featurizer<T>,
    readout: ReadoutMatrix<T>,
    /// `W_out` in row-major order for the rollout inner loop.
    weights: Vec<T>,
}

impl<T: Scalar> TrainedModel<T> {
    pub fn new(config: NgrcConfig<T>, readout: ReadoutMatrix<T>) -> Result<Self, FeatureError> {
        let featurizer = Featurizer::new(&config)?;
        let (rows, cols) = readout.w_out.shape();
        if rows != config.dim || cols != featurizer.feature_dim() {
            return Err(FeatureError::DimensionMismatch {
                expected: config.dim * featurizer.feature_dim(),
                got: rows * cols,
            });
        }
        let weights = readout.row_major();
        Ok(Self {
            featurizer,
            readout,
            weights,
        })
    }

    pub fn config(&self) -> &NgrcConfig<T> {
        self.featurizer.config()
    }

    pub fn table(&self) -> &MonomialTable {
        self.featurizer.table()
    }

    pub fn readout(&self) -> &ReadoutMatrix<T> {
        &self.readout
    }

    /// States needed before the first prediction, `(k-1)·s + 1`.
    pub fn history_len(&self) -> usize {
        self.config().warmup() + 1
    }

    /// `W_out · features`, accumulated in a fixed order.
    fn increment(&self, features: &[T], out: &mut [T]) {
        let n = features.len();
        for (a, o) in out.iter_mut().enumerate() {
            let row = &self.weights[a * n..(a + 1) * n];
            *o = row
                .iter()
                .zip(features)
                .fold(T::zero(), |acc, (w, f)| acc + *w * *f);
        }
    }
}

/// One step from the last `history_len` states of the row-major `history`.
pub fn predict_step<T: Scalar>(
    history: &[T],
    model: &TrainedModel<T>,
    theta: T,
) -> Result<Vec<T>, PredictorError> {
    let d = model.config().dim;
    let needed = model.history_len();
    if history.len() % d != 0 || history.len() < needed * d {
        return Err(PredictorError::WarmupTooShort {
            needed,
            got: history.len() / d,
        });
    }
    let window = &history[history.len() - needed * d..];
    let mut features = vec![T::zero(); model.featurizer.feature_dim()];
    model.featurizer.fill_window(window, theta, &mut features);
    let mut next = vec![T::zero(); d];
    model.increment(&features, &mut next);
    for (n, x) in next.iter_mut().zip(&window[(needed - 1) * d..]) {
        *n += *x;
    }
    if next.iter().any(|v| !v.is_finite()) {
        return Err(PredictorError::NonFinite);
    }
    Ok(next)
}

/// Per-step bifurcation parameter for non-stationary rollouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ParameterSchedule<T> {
    /// One value per step; may be longer than the run.
    Explicit { values: Vec<T> },
    Constant { theta: T },
    /// `before` for steps `< switch_step`, `after` from then on.
    StepSwitch { before: T, after: T, switch_step: usize },
    /// `base + slope·i + amplitude·sin(2π i / period)` at step `i`.
    SinePlusLinear {
        base: T,
        slope: T,
        amplitude: T,
        period: T,
    },
}

impl<T: Scalar> ParameterSchedule<T> {
    /// Explicit θ array for steps `0..n_steps`.
    pub fn resolve(&self, n_steps: usize) -> Result<Vec<T>, PredictorError> {
        let values = match self {
            Self::Explicit { values } => {
                if values.len() < n_steps {
                    return Err(PredictorError::ScheduleTooShort {
                        needed: n_steps,
                        got: values.len(),
                    });
                }
                values[..n_steps].to_vec()
            }
            Self::Constant { theta } => vec![*theta; n_steps],
            Self::StepSwitch {
                before,
                after,
                switch_step,
            } => (0..n_steps)
                .map(|i| if i < *switch_step { *before } else { *after })
                .collect(),
            Self::SinePlusLinear {
                base,
                slope,
                amplitude,
                period,
            } => {
                if !(*period > T::zero()) {
                    return Err(PredictorError::InvalidSchedule(
                        "sine period must be positive".into(),
                    ));
                }
                (0..n_steps)
                    .map(|i| {
                        let i = T::from_count(i);
                        *base + *slope * i + *amplitude * (T::two_pi() * i / *period).sin()
                    })
                    .collect()
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PredictorError::InvalidSchedule("non-finite θ value".into()));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult<T> {
    /// Warm-up states followed by the predicted ones, cut before any collapse.
    pub trajectory: Trajectory<T>,
    /// θ per trajectory row; warm-up rows carry the first scheduled value.
    pub thetas: Vec<T>,
    pub warmup_len: usize,
    pub collapse: Option<Collapse>,
}

/// Autonomous rollout at fixed `theta`.
pub fn free_run<T: Scalar>(
    warmup: &Trajectory<T>,
    model: &TrainedModel<T>,
    theta: T,
    n_steps: usize,
    rules: &CollapseRules<T>,
) -> Result<PredictionResult<T>, PredictorError> {
    free_run_nonstationary(
        warmup,
        model,
        &ParameterSchedule::Constant { theta },
        n_steps,
        rules,
    )
}

/// Autonomous rollout reading `θ_i` from `schedule` at every step.
///
/// Every state, the warm-up included, is checked against `rules`; the run
/// stops at the first collapse and the output is cut at the collapse index.
pub fn free_run_nonstationary<T: Scalar>(
    warmup: &Trajectory<T>,
    model: &TrainedModel<T>,
    schedule: &ParameterSchedule<T>,
    n_steps: usize,
    rules: &CollapseRules<T>,
) -> Result<PredictionResult<T>, PredictorError> {
    if n_steps == 0 {
        return Err(PredictorError::ZeroSteps);
    }
    let d = model.config().dim;
    if warmup.dim() != d {
        return Err(FeatureError::DimensionMismatch {
            expected: d,
            got: warmup.dim(),
        }
        .into());
    }
    let needed = model.history_len();
    if warmup.len() < needed {
        return Err(PredictorError::WarmupTooShort {
            needed,
            got: warmup.len(),
        });
    }
    let thetas = schedule.resolve(n_steps)?;
    let warmup_len = warmup.len();
    let mut traj = warmup.clone();
    let mut row_thetas = vec![thetas[0]; warmup_len];
    row_thetas.reserve(n_steps);

    let mut monitor = rules.monitor();
    let mut collapse = warmup
        .states()
        .enumerate()
        .find_map(|(i, s)| monitor.observe(i, s));

    if collapse.is_none() {
        let mut features = vec![T::zero(); model.featurizer.feature_dim()];
        let mut next = vec![T::zero(); d];
        for &theta in &thetas {
            let i = traj.len() - 1;
            let flat = traj.as_flat();
            model
                .featurizer
                .fill_window(&flat[(i + 1 - needed) * d..(i + 1) * d], theta, &mut features);
            model.increment(&features, &mut next);
            for (n, x) in next.iter_mut().zip(&flat[i * d..(i + 1) * d]) {
                *n += *x;
            }
            traj.push(&next);
            row_thetas.push(theta);
            if let Some(c) = monitor.observe(i + 1, &next) {
                collapse = Some(c);
                break;
            }
        }
    }
    if let Some(c) = collapse {
        // A collapse flagged at the very first state still leaves that state.
        traj.truncate(c.step.max(1));
        row_thetas.truncate(c.step.max(1));
    }
    Ok(PredictionResult {
        trajectory: traj,
        thetas: row_thetas,
        warmup_len,
        collapse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collapse::CollapseKind;
    use crate::features::MonomialOrder;
    use crate::ridge::RidgeMethod;
    use crate::training::{train, Provenance, TrainingDescriptor, TrainingSample, TrainingSet};
    use nalgebra::DMatrix;

    fn cfg(dim: usize) -> NgrcConfig<f64> {
        NgrcConfig {
            dim,
            k: 2,
            s: 1,
            orders: vec![1],
            state_orders: vec![0, 1],
            beta: 0.0,
            gamma: 0.0,
            monomial_order: MonomialOrder::GradedLex,
        }
    }

    fn zero_model(dim: usize) -> TrainedModel<f64> {
        let c = cfg(dim);
        let n = c.feature_dim();
        let readout = ReadoutMatrix {
            w_out: DMatrix::zeros(dim, n),
            provenance: Provenance {
                config_hash: String::new(),
                descriptor: TrainingDescriptor {
                    thetas: vec![],
                    columns_per_sample: vec![],
                    total_columns: 0,
                    method: RidgeMethod::Orthogonal,
                },
            },
        };
        TrainedModel::new(c, readout).unwrap()
    }

    fn rules() -> CollapseRules<f64> {
        CollapseRules::divergence_only(1e6)
    }

    #[test]
    fn zero_readout_propagates_identity() {
        let m = zero_model(2);
        assert_eq!(predict_step(&[1.0, 2.0, 3.0, 4.0], &m, 0.3).unwrap(), vec![3.0, 4.0]);
        let warm = Trajectory::from_states(&[[1.0, 2.0], [3.0, 4.0]], 0.1, 0.0);
        let out = free_run(&warm, &m, 0.0, 50, &rules()).unwrap();
        assert_eq!(out.collapse, None);
        assert_eq!(out.trajectory.len(), 52);
        assert!(out.trajectory.states().skip(1).all(|s| s == [3.0, 4.0]));
        assert!(matches!(
            predict_step(&[1.0, 2.0], &m, 0.0),
            Err(PredictorError::WarmupTooShort { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn exact_fit_ramp() {
        // A ramp x_t = 0.5 + 0.01 t is reproduced by the bias column alone.
        let ramp: Vec<f64> = (0..200).map(|t| 0.5 + 0.01 * t as f64).collect();
        let set = TrainingSet::new(vec![TrainingSample {
            trajectory: Trajectory::from_series(&ramp, 1.0, 0.0),
            theta: 0.0,
        }]);
        let mut c = cfg(1);
        c.beta = 1e-12;
        let m = train(&set, &c, RidgeMethod::Orthogonal).unwrap();
        let warm = Trajectory::from_series(&ramp[..2], 1.0, 0.0);
        let out = free_run(&warm, &m, 0.0, 300, &rules()).unwrap();
        for (t, s) in out.trajectory.states().enumerate() {
            assert!((s[0] - (0.5 + 0.01 * t as f64)).abs() < 1e-8, "step {t}");
        }
    }

    #[test]
    fn divergence_truncates() {
        // Doubling map x_{i+1} = 2 x_i leaves the bound after about 20 steps.
        let c = cfg(1);
        let readout = ReadoutMatrix {
            w_out: DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]),
            ..zero_model(1).readout().clone()
        };
        let m = TrainedModel::new(c, readout).unwrap();
        let warm = Trajectory::from_series(&[1.0, 1.0], 1.0, 0.0);
        let out = free_run(&warm, &m, 0.0, 100, &rules()).unwrap();
        let c = out.collapse.unwrap();
        assert_eq!(c.kind, CollapseKind::Divergence);
        // State j equals 2^(j-1); 2^20 > 1e6.
        assert_eq!(c.step, 21);
        assert_eq!(out.trajectory.len(), 21);
        assert_eq!(out.thetas.len(), 21);
    }

    #[test]
    fn constant_schedule_equals_fixed_theta() {
        let ramp: Vec<f64> = (0..100).map(|t| (0.1 * t as f64).sin()).collect();
        let set = TrainingSet::new(vec![TrainingSample {
            trajectory: Trajectory::from_series(&ramp, 0.1, 0.0),
            theta: 0.3,
        }]);
        let mut c = cfg(1);
        c.beta = 1e-6;
        c.gamma = 0.5;
        let m = train(&set, &c, RidgeMethod::Orthogonal).unwrap();
        let warm = Trajectory::from_series(&ramp[..2], 0.1, 0.0);
        let a = free_run(&warm, &m, 0.3, 500, &rules()).unwrap();
        let b = free_run_nonstationary(
            &warm,
            &m,
            &ParameterSchedule::Explicit {
                values: vec![0.3; 600],
            },
            500,
            &rules(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn schedules_resolve() {
        let s = ParameterSchedule::StepSwitch {
            before: 0.955,
            after: 0.965,
            switch_step: 2,
        };
        assert_eq!(s.resolve(4).unwrap(), vec![0.955, 0.955, 0.965, 0.965]);
        let s = ParameterSchedule::<f64>::SinePlusLinear {
            base: 1.0,
            slope: 0.5,
            amplitude: 2.0,
            period: 4.0,
        };
        let v = s.resolve(3).unwrap();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 3.5).abs() < 1e-12 && (v[2] - 2.0).abs() < 1e-12);
        assert!(matches!(
            ParameterSchedule::Explicit { values: vec![1.0] }.resolve(2),
            Err(PredictorError::ScheduleTooShort { needed: 2, got: 1 })
        ));
        let m = zero_model(1);
        let warm = Trajectory::from_series(&[1.0, 1.0], 1.0, 0.0);
        assert!(matches!(
            free_run(&warm, &m, 0.0, 0, &rules()),
            Err(PredictorError::ZeroSteps)
        ));
    }
}
