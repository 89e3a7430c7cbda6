use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QtoaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid phase: {0}")]
    InvalidPhase(String),

    #[error("numerical failure: {message} (best estimate {best_estimate:e}, error estimate {error_estimate:e})")]
    NumericalFailure { message: String, best_estimate: f64, error_estimate: f64 },

    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),

    #[error("overflow: {0}")]
    Overflow(String),
}

impl QtoaError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        QtoaError::InvalidParameter(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, best_estimate: f64, error_estimate: f64) -> Self {
        QtoaError::NumericalFailure { message: msg.into(), best_estimate, error_estimate }
    }
}

pub type Result<T> = std::result::Result<T, QtoaError>;
