use qclock_core::QtoaError;

use crate::output::Output;

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Invalid(String),
    /// Exit 3; the report is still written.
    Infeasible(String, Output),
    /// Exit 4.
    Numerical(String),
    /// Exit 4; the report is still written.
    CheckFailed(String, Output),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Infeasible(..) => 3,
            CliError::Numerical(_) | CliError::CheckFailed(..) => 4,
        }
    }

    /// Report to write before exiting, if the failure carries one.
    pub fn into_report(self) -> Option<Output> {
        match self {
            CliError::Infeasible(_, o) | CliError::CheckFailed(_, o) => Some(o),
            CliError::Invalid(_) | CliError::Numerical(_) => None,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Invalid(m)
            | CliError::Numerical(m)
            | CliError::Infeasible(m, _)
            | CliError::CheckFailed(m, _) => m,
        }
    }
}

impl From<QtoaError> for CliError {
    fn from(e: QtoaError) -> Self {
        match e {
            QtoaError::InvalidParameter(_) | QtoaError::InvalidPhase(_) | QtoaError::DegenerateInput(_) => {
                CliError::Invalid(e.to_string())
            }
            QtoaError::GridTooNarrow(_) => CliError::Numerical(format!("{e} (increase --half-width)")),
            QtoaError::NumericalFailure { .. } | QtoaError::Overflow(_) => CliError::Numerical(e.to_string()),
        }
    }
}
