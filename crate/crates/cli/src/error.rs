use std::io;

use skdv_core::coefficients::CoefficientError;
use skdv_core::estimators::EstimatorError;
use skdv_core::solver::SolverError;
use skdv_core::trajectory::TrajectoryError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{key}: {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    BlowUp(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    ValidationFailed(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::BlowUp(_) => 3,
            CliError::Io { .. } => 4,
            CliError::ValidationFailed(_) | CliError::Internal(_) => 1,
        }
    }

    /// Machine-readable category printed with every error.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::BlowUp(_) => "blow_up",
            CliError::Io { .. } => "io",
            CliError::ValidationFailed(_) => "validation_failed",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn io(path: &std::path::Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::BlowUp(_) => CliError::BlowUp(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::TooManyBlowUps { .. } => CliError::BlowUp(e.to_string()),
            EstimatorError::Solver(s) => s.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<CoefficientError> for CliError {
    fn from(e: CoefficientError) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<TrajectoryError> for CliError {
    fn from(e: TrajectoryError) -> Self {
        match e {
            TrajectoryError::Io(source) => CliError::Io {
                path: "<trajectory>".into(),
                source,
            },
            other => CliError::Internal(other.to_string()),
        }
    }
}
