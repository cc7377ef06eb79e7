use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GhdError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
}

pub type Result<T> = std::result::Result<T, GhdError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(GhdError::InvalidArgument(msg.into()))
}
