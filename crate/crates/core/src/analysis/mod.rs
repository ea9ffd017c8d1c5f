//! Dynamics diagnostics: Lyapunov exponents, bifurcation diagrams, tipping
//! points and scaling-parameter sweeps.

mod bifurcation;
mod extrema;
mod lyapunov;
mod stats;
mod sweep;
mod tipping;

pub use bifurcation::{
    reconstruct_bifurcation, BifurcationDiagram, BifurcationRow, ReconstructionSettings,
    RowSettings, WarmupSource,
};
pub use extrema::local_maxima;
pub use lyapunov::{
    autocorrelation_zero, benettin_lle, mean_period, rosenstein_lle, BenettinParams,
    LyapunovEstimate, LyapunovMethod, RosensteinParams,
};
pub use stats::ks_statistic;
pub use sweep::{
    gamma_sweep, training_lambdas, validate_at_training, EnvelopeRow, GammaEntry,
    GammaSweepResult, ValidationRecord, ValidationTolerance,
};
pub use tipping::{find_tipping, TippingKind, TippingParams, TippingPoint};

pub(crate) use bifurcation::summarize_run;

use thiserror::Error;

use crate::ode::OdeError;
use crate::predictor::PredictorError;
use crate::training::TrainingError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid analysis parameters: {0}")]
    InvalidParams(String),
    #[error("series has {got} samples, at least {needed} are required")]
    TooShort { needed: usize, got: usize },
    #[error("no valid nearest neighbours outside the Theiler window")]
    NoNeighbours,
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("reference trajectory diverged at step {step}")]
    Diverged { step: usize },
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Training(#[from] TrainingError),
}

/// Sorted copy of `grid`, rejecting empty or non-finite input.
pub(crate) fn sorted_grid<T: crate::scalar::Scalar>(grid: &[T]) -> Result<Vec<T>, AnalysisError> {
    if grid.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::InvalidParams("grid contains non-finite values".into()));
    }
    let mut g = grid.to_vec();
    g.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(g)
}
