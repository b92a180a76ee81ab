use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular model: {0}")]
    SingularModel(String),

    /// Every joint sample carried zero interaction weight.
    #[error("importance weights underflowed (max raw log-weight {max_log_weight})")]
    WeightUnderflow { max_log_weight: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
