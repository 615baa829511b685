//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibraError {
    /// Failure while parsing an input file; carries the location when known.
    #[error("parse error in {path} (line {line}): {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Input data violates a documented precondition.
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numeric routine produced a non-finite intermediate value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A serialized model does not match the expected schema.
    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CalibraError>;
