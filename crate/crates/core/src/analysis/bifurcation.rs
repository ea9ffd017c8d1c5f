use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{local_maxima, rosenstein_lle, sorted_grid, AnalysisError, RosensteinParams};
use crate::collapse::{Collapse, CollapseRules};
use crate::ode::{integrate, Model};
use crate::predictor::{free_run, TrainedModel};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationRow<T> {
    pub theta: T,
    /// Local maxima of the observable after the transient.
    pub scatter: Vec<T>,
    pub lambda_max: Option<T>,
    pub collapse: Option<Collapse>,
    /// Why a quantity is missing, if it is.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram<T> {
    /// State component the scatter was taken from.
    pub observable: usize,
    /// Sorted by `theta`.
    pub rows: Vec<BifurcationRow<T>>,
}

impl<T: Scalar> BifurcationDiagram<T> {
    pub fn new(observable: usize, mut rows: Vec<BifurcationRow<T>>) -> Self {
        rows.sort_by(|a, b| a.theta.partial_cmp(&b.theta).expect("finite theta"));
        Self { observable, rows }
    }

    pub fn thetas(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.theta).collect()
    }

    /// First row, in θ order, that collapsed.
    pub fn first_collapse(&self) -> Option<&BifurcationRow<T>> {
        self.rows.iter().find(|r| r.collapse.is_some())
    }
}

/// How a single run is turned into a diagram row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSettings {
    /// Leading fraction of the nominal run length dropped before analysis.
    pub transient_fraction: f64,
    pub observable: usize,
    /// Rosenstein settings, or `None` to skip the exponent.
    pub lyapunov: Option<RosensteinParams>,
}

/// Row for a run that was meant to hold `nominal_len` states; `traj` may be
/// shorter when it was cut at `collapse`.
pub(crate) fn summarize_run<T: Scalar>(
    theta: T,
    traj: &Trajectory<T>,
    nominal_len: usize,
    collapse: Option<Collapse>,
    settings: &RowSettings,
) -> BifurcationRow<T> {
    let discard = (settings.transient_fraction * nominal_len as f64).floor() as usize;
    let series = if settings.observable < traj.dim() {
        traj.component(settings.observable)
    } else {
        Vec::new()
    };
    let scatter = local_maxima(&series, discard);
    let mut note = None;
    let mut lambda_max = None;
    if collapse.is_none() {
        if let Some(params) = &settings.lyapunov {
            match rosenstein_lle(&series[discard.min(series.len())..], traj.dt(), params) {
                Ok(est) => lambda_max = Some(est.lambda_max),
                Err(e) => note = Some(format!("lyapunov: {e}")),
            }
        }
    }
    BifurcationRow {
        theta,
        scatter,
        lambda_max,
        collapse,
        note,
    }
}

/// Source of the `(k-1)·s + 1` states that seed each rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WarmupSource<T> {
    /// Integrate the reference model at each grid θ from `x0`.
    Rk4 { system: Model<T>, x0: Vec<T>, dt: T },
    /// Reuse the same leading states for every grid point.
    Fixed { trajectory: Trajectory<T> },
}

impl<T: Scalar> WarmupSource<T> {
    pub fn warmup(&self, theta: T, len: usize) -> Result<Trajectory<T>, AnalysisError> {
        match self {
            Self::Rk4 { system, x0, dt } => {
                if len <= 1 {
                    return Ok(Trajectory::from_initial(x0, *dt, T::zero()));
                }
                let field = system.with_parameter(theta).field()?;
                let bound = T::lit(crate::ode::DEFAULT_DIVERGENCE_BOUND);
                let run = integrate(&field, x0, *dt, len - 1, bound)?;
                if let Some(step) = run.diverged_at {
                    return Err(AnalysisError::Diverged { step });
                }
                Ok(run.trajectory)
            }
            Self::Fixed { trajectory } => {
                if trajectory.len() < len {
                    return Err(AnalysisError::TooShort {
                        needed: len,
                        got: trajectory.len(),
                    });
                }
                Ok(trajectory.slice(trajectory.len() - len, trajectory.len()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionSettings<T> {
    /// Predicted steps per grid point, after the warm-up.
    pub n_steps: usize,
    pub row: RowSettings,
    pub rules: CollapseRules<T>,
    pub warmup: WarmupSource<T>,
}

/// Predicted diagram: one closed-loop rollout of `model` per grid θ.
///
/// Grid points run in parallel; failures end up in the row's `note`.
pub fn reconstruct_bifurcation<T: Scalar>(
    model: &TrainedModel<T>,
    grid: &[T],
    settings: &ReconstructionSettings<T>,
) -> Result<BifurcationDiagram<T>, AnalysisError> {
    let grid = sorted_grid(grid)?;
    let history = model.history_len();
    let rows = grid
        .par_iter()
        .map(|&theta| {
            let run = settings
                .warmup
                .warmup(theta, history)
                .and_then(|w| Ok(free_run(&w, model, theta, settings.n_steps, &settings.rules)?));
            match run {
                Ok(out) => summarize_run(
                    theta,
                    &out.trajectory,
                    out.warmup_len + settings.n_steps,
                    out.collapse,
                    &settings.row,
                ),
                Err(e) => BifurcationRow {
                    theta,
                    scatter: Vec::new(),
                    lambda_max: None,
                    collapse: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(BifurcationDiagram::new(settings.row.observable, rows))
}
