use thiserror::Error;

/// Errors produced by the tomography toolkit.
#[derive(Debug, Error)]
pub enum TomoError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit: {what} ({requested} > cap {cap})")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("parse error at `{key}`: {msg}")]
    Parse { key: String, msg: String },

    #[error("validation error at `{key}`: {msg}")]
    Validation { key: String, msg: String },

    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, TomoError>;

pub(crate) fn invalid(msg: impl Into<String>) -> TomoError {
    TomoError::InvalidArgument(msg.into())
}
