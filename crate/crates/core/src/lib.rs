//! Parameter-aware next-generation reservoir computing.
//!
//! The crate learns a one-step integrator `x_{i+1} = x_i + W_out q(P(L(x_i)) + γθ)`
//! from trajectories recorded at a handful of bifurcation-parameter values and
//! uses it to reconstruct bifurcation diagrams, locate tipping points and run
//! non-stationary simulations. Two benchmark systems (a power system with
//! voltage collapse and a chaotic food chain) provide ground truth.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`, which is what the published setups need.

pub mod analysis;
pub mod collapse;
pub mod features;
pub mod ode;
pub mod predictor;
pub mod ridge;
pub mod scalar;
pub mod training;
pub mod trajectory;

use thiserror::Error;

pub use analysis::AnalysisError;
pub use collapse::{Collapse, CollapseKind, CollapseRules};
pub use features::{FeatureError, NgrcConfig};
pub use ode::{Model, ModelKind, OdeError};
pub use predictor::{ParameterSchedule, PredictorError, TrainedModel};
pub use ridge::{RidgeError, RidgeMethod};
pub use scalar::Scalar;
pub use training::{ModelFile, TrainingError, TrainingSample, TrainingSet};
pub use trajectory::Trajectory;

/// Any error raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Training(#[from] TrainingError),
    #[error(transparent)]
    Ridge(#[from] RidgeError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

pub type TrajectoryF64 = Trajectory<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type NgrcConfigF64 = NgrcConfig<f64>;
pub type NgrcConfigF32 = NgrcConfig<f32>;
pub type ModelF64 = Model<f64>;
pub type ModelF32 = Model<f32>;
pub type TrainedModelF64 = TrainedModel<f64>;
pub type TrainedModelF32 = TrainedModel<f32>;
pub type TrainingSetF64 = TrainingSet<f64>;
pub type TrainingSetF32 = TrainingSet<f32>;
pub type BifurcationDiagramF64 = analysis::BifurcationDiagram<f64>;
pub type BifurcationDiagramF32 = analysis::BifurcationDiagram<f32>;
