use thiserror::Error;

/// Errors produced by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    /// The fast path does not apply to this input; callers fall back to the full pipeline.
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("property violation: {0}")]
    PropertyViolation(String),
    /// A broken internal contract. Never caused by user input.
    #[error("internal error: {0}")]
    Internal(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
