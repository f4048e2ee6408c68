use thiserror::Error;

/// Errors shared across the toolkit.
///
/// The variants map onto the CLI exit codes: validation problems exit with 1,
/// numerical failures with 2 and coupling violations with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("count overflow: {0} exceeds the 2^32-1 cap")]
    Overflow(&'static str),

    #[error("quadrature did not reach tolerance {tol:e}; achieved bound {achieved:e}")]
    Quadrature { tol: f64, achieved: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("pathwise coupling violation: {message}")]
    CouplingViolation {
        message: String,
        /// Recent events leading up to the violation, as CSV text.
        trace_csv: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    /// Process exit code associated with this error class.
    #[must_use]
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::Io(_) | Error::Serde(_) | Error::Csv(_) => 1,
            Error::Overflow(_) | Error::Quadrature { .. } | Error::Numerical(_) => 2,
            Error::CouplingViolation { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
