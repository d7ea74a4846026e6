use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Sample variance of a replication set is zero, so its log-mean has no
    /// usable standard deviation.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("singular design: {0}")]
    SingularDesign(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
