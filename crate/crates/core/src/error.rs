use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid graph shift operator: {0}")]
    InvalidOperator(String),

    #[error("value outside domain: {0}")]
    DomainError(String),

    #[error("invalid model order: {0}")]
    ModelOrderError(String),

    #[error("model assumption violated: {0}")]
    ModelViolation(String),

    #[error("non-finite value at sample {index}: {message}")]
    NumericalError { index: usize, message: String },

    #[error("empty sample set")]
    EmptySample,

    #[error("shape mismatch: {0}")]
    ShapeError(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("repetition {rep}: {source}")]
    Repetition {
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn numerical(index: usize, message: impl Into<String>) -> Self {
        Error::NumericalError {
            index,
            message: message.into(),
        }
    }
}
