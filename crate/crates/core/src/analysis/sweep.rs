use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    reconstruct_bifurcation, rosenstein_lle, sorted_grid, AnalysisError, ReconstructionSettings,
};
use crate::collapse::Collapse;
use crate::features::NgrcConfig;
use crate::predictor::TrainedModel;
use crate::ridge::RidgeMethod;
use crate::scalar::Scalar;
use crate::training::{train, TrainingSet};

/// A prediction passes at a training θ when
/// `|λ_pred - λ_train| ≤ max(relative·|λ_train|, absolute)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationTolerance {
    pub relative: f64,
    /// Per unit time.
    pub absolute: f64,
}

impl Default for ValidationTolerance {
    fn default() -> Self {
        Self {
            relative: 0.05,
            absolute: 0.005,
        }
    }
}

impl ValidationTolerance {
    pub fn accepts(&self, train: f64, pred: f64) -> bool {
        (pred - train).abs() <= (self.relative * train.abs()).max(self.absolute)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord<T> {
    pub theta: T,
    pub lambda_train: Option<T>,
    pub lambda_pred: Option<T>,
    pub error: Option<T>,
    pub collapse: Option<Collapse>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEntry<T> {
    pub gamma: T,
    pub thetas: Vec<T>,
    pub lambdas: Vec<Option<T>>,
    pub collapses: Vec<Option<Collapse>>,
    pub validation: Vec<ValidationRecord<T>>,
    pub passed: bool,
    /// Training or reconstruction failure, if any.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow<T> {
    pub theta: T,
    pub min: Option<T>,
    pub max: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSweepResult<T> {
    /// Sorted by γ.
    pub entries: Vec<GammaEntry<T>>,
    /// Range of predicted λ across all γ at each grid θ.
    pub envelope: Vec<EnvelopeRow<T>>,
}

/// λ of every training trajectory under the row settings of `settings`.
pub fn training_lambdas<T: Scalar>(
    set: &TrainingSet<T>,
    settings: &ReconstructionSettings<T>,
) -> Vec<Option<T>> {
    let row = &settings.row;
    set.samples
        .par_iter()
        .map(|s| {
            let params = row.lyapunov.as_ref()?;
            let series = s.trajectory.component(row.observable);
            let discard = (row.transient_fraction * series.len() as f64).floor() as usize;
            rosenstein_lle(&series[discard.min(series.len())..], s.trajectory.dt(), params)
                .ok()
                .map(|e| e.lambda_max)
        })
        .collect()
}

/// Compares predicted and training-data λ at every training θ.
pub fn validate_at_training<T: Scalar>(
    model: &TrainedModel<T>,
    set: &TrainingSet<T>,
    train_lambdas: &[Option<T>],
    settings: &ReconstructionSettings<T>,
    tolerance: &ValidationTolerance,
) -> Result<Vec<ValidationRecord<T>>, AnalysisError> {
    let thetas = set.thetas();
    let diagram = reconstruct_bifurcation(model, &thetas, settings)?;
    Ok(thetas
        .iter()
        .zip(train_lambdas)
        .map(|(&theta, &lambda_train)| {
            let row = diagram
                .rows
                .iter()
                .find(|r| r.theta == theta)
                .expect("every training θ is in the diagram");
            let lambda_pred = row.lambda_max;
            let error = match (lambda_train, lambda_pred) {
                (Some(a), Some(b)) => Some((b - a).abs()),
                _ => None,
            };
            let pass = row.collapse.is_none()
                && matches!((lambda_train, lambda_pred), (Some(a), Some(b)) if tolerance.accepts(a.as_f64(), b.as_f64()));
            ValidationRecord {
                theta,
                lambda_train,
                lambda_pred,
                error,
                collapse: row.collapse,
                pass,
            }
        })
        .collect())
}

/// Trains one model per γ, reconstructs its diagram over `grid` and validates
/// it at the training θs.
pub fn gamma_sweep<T: Scalar>(
    set: &TrainingSet<T>,
    template: &NgrcConfig<T>,
    gammas: &[T],
    grid: &[T],
    settings: &ReconstructionSettings<T>,
    tolerance: &ValidationTolerance,
    method: RidgeMethod,
) -> Result<GammaSweepResult<T>, AnalysisError> {
    let gammas = sorted_grid(gammas)?;
    let grid = sorted_grid(grid)?;
    set.validate()?;
    let train_lambdas = training_lambdas(set, settings);
    let entries: Vec<GammaEntry<T>> = gammas
        .iter()
        .map(|&gamma| {
            let failed = |msg: String| GammaEntry {
                gamma,
                thetas: grid.clone(),
                lambdas: vec![None; grid.len()],
                collapses: vec![None; grid.len()],
                validation: Vec::new(),
                passed: false,
                failure: Some(msg),
            };
            let config = NgrcConfig {
                gamma,
                ..template.clone()
            };
            let model = match train(set, &config, method) {
                Ok(m) => m,
                Err(e) => return failed(format!("training: {e}")),
            };
            let diagram = match reconstruct_bifurcation(&model, &grid, settings) {
                Ok(d) => d,
                Err(e) => return failed(format!("reconstruction: {e}")),
            };
            let validation =
                match validate_at_training(&model, set, &train_lambdas, settings, tolerance) {
                    Ok(v) => v,
                    Err(e) => return failed(format!("validation: {e}")),
                };
            GammaEntry {
                gamma,
                thetas: diagram.thetas(),
                lambdas: diagram.rows.iter().map(|r| r.lambda_max).collect(),
                collapses: diagram.rows.iter().map(|r| r.collapse).collect(),
                passed: validation.iter().all(|v| v.pass),
                validation,
                failure: None,
            }
        })
        .collect();
    let envelope = grid
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let vals = entries.iter().filter_map(|e| e.lambdas[i]);
            let (min, max) = vals.fold((None, None), |(lo, hi): (Option<T>, Option<T>), v| {
                (
                    Some(lo.map_or(v, |l| l.min(v))),
                    Some(hi.map_or(v, |h| h.max(v))),
                )
            });
            EnvelopeRow { theta, min, max }
        })
        .collect();
    Ok(GammaSweepResult { entries, envelope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_rule() {
        let t = ValidationTolerance {
            relative: 0.05,
            absolute: 0.005,
        };
        assert!(t.accepts(0.2, 0.209));
        assert!(!t.accepts(0.2, 0.2101));
        assert!(t.accepts(0.0, 0.004));
        assert!(!t.accepts(0.0, 0.006));
    }
}
