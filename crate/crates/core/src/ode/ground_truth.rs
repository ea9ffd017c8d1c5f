//! Reference bifurcation diagrams from direct integration of the model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{integrate, Model};
use crate::analysis::{summarize_run, AnalysisError, BifurcationDiagram, RosensteinParams, RowSettings};
use crate::collapse::{detect_collapse, Collapse, CollapseKind, CollapseRules};
use crate::scalar::Scalar;

/// Settings for generating one reference trajectory per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationRecipe<T> {
    /// Every grid point starts from this state.
    pub x0: Vec<T>,
    pub dt: T,
    pub n_steps: usize,
    pub transient_fraction: f64,
    pub observable: usize,
    pub rules: CollapseRules<T>,
    #[serde(default)]
    pub lyapunov: Option<RosensteinParams>,
}

impl<T: Scalar> GenerationRecipe<T> {
    /// Defaults of `model`, with the Rosenstein preset tuned to it.
    pub fn for_model(model: &Model<T>) -> Self {
        Self {
            x0: model.default_initial_state(),
            dt: model.default_dt(),
            n_steps: model.default_steps(),
            transient_fraction: 0.3,
            observable: model.default_observable(),
            rules: model.default_collapse_rules(),
            lyapunov: Some(RosensteinParams::for_model(model.kind())),
        }
    }

    pub fn row_settings(&self) -> RowSettings {
        RowSettings {
            transient_fraction: self.transient_fraction,
            observable: self.observable,
            lyapunov: self.lyapunov,
        }
    }
}

/// Integrates `model` at every grid value of its bifurcation parameter and
/// summarizes each run as a diagram row. Grid points run in parallel; the
/// output is sorted by θ and independent of scheduling.
pub fn ground_truth_bifurcation<T: Scalar>(
    model: &Model<T>,
    grid: &[T],
    recipe: &GenerationRecipe<T>,
) -> Result<BifurcationDiagram<T>, AnalysisError> {
    let grid = crate::analysis::sorted_grid(grid)?;
    if recipe.x0.len() != model.dim() {
        return Err(super::OdeError::DimensionMismatch {
            expected: model.dim(),
            got: recipe.x0.len(),
        }
        .into());
    }
    if !(0.0..1.0).contains(&recipe.transient_fraction) {
        return Err(AnalysisError::InvalidParams(
            "transient_fraction must lie in [0, 1)".into(),
        ));
    }
    let settings = recipe.row_settings();
    let rows = grid
        .par_iter()
        .map(|&theta| {
            let field = model.with_parameter(theta).field()?;
            let run = integrate(&field, &recipe.x0, recipe.dt, recipe.n_steps, recipe.rules.divergence_bound)?;
            let mut collapse = run.diverged_at.map(|step| Collapse {
                step,
                kind: CollapseKind::Divergence,
            });
            if let Some(c) = detect_collapse(&run.trajectory, &recipe.rules) {
                if collapse.map_or(true, |d| c.step < d.step) {
                    collapse = Some(c);
                }
            }
            let traj = match collapse {
                Some(c) => run.trajectory.slice(0, c.step.max(1)),
                None => run.trajectory,
            };
            Ok(summarize_run(theta, &traj, recipe.n_steps + 1, collapse, &settings))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(BifurcationDiagram::new(recipe.observable, rows))
}
