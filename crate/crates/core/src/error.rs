use thiserror::Error;

/// Errors raised by spectrum construction and the numerical operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("empty spectrum: {0}")]
    EmptySpectrum(String),

    #[error("spectrum validation failed: {0}")]
    Validation(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge ({message}); achieved estimate {achieved:e} with error {error:e}")]
    Accuracy {
        message: String,
        achieved: f64,
        error: f64,
    },

    #[error("insufficient data: need at least {needed} eigenvalues, found {found}")]
    InsufficientData { needed: u64, found: u64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
