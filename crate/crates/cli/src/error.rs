use ngrc_core::features::FeatureError;
use ngrc_core::{AnalysisError, OdeError, PredictorError, RidgeError, TrainingError};
use thiserror::Error;

/// Failure of a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Data(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::InvalidConfig(_) => Self::Config(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<RidgeError> for CliError {
    fn from(e: RidgeError) -> Self {
        match e {
            RidgeError::InvalidBeta(_) => Self::Config(e.to_string()),
            RidgeError::Singular { .. } => Self::Numerical(e.to_string()),
            RidgeError::Shape(_) | RidgeError::Empty => Self::Data(e.to_string()),
        }
    }
}

impl From<OdeError> for CliError {
    fn from(e: OdeError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<TrainingError> for CliError {
    fn from(e: TrainingError) -> Self {
        match e {
            TrainingError::Feature(f) => f.into(),
            TrainingError::Ridge(r) => r.into(),
            TrainingError::NonFinite(_) => Self::Numerical(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<PredictorError> for CliError {
    fn from(e: PredictorError) -> Self {
        match e {
            PredictorError::Feature(f) => f.into(),
            PredictorError::WarmupTooShort { .. } => Self::Data(e.to_string()),
            PredictorError::NonFinite => Self::Numerical(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvalidParams(_) | AnalysisError::EmptyGrid => Self::Config(e.to_string()),
            AnalysisError::Ode(o) => o.into(),
            AnalysisError::Predictor(p) => p.into(),
            AnalysisError::Training(t) => t.into(),
            _ => Self::Numerical(e.to_string()),
        }
    }
}
