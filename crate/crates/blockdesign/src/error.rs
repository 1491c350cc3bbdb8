use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("resource exhausted: {0}")]
    ResourceExhausted(String),
    #[error("precondition violation: {0}")]
    PreconditionViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
