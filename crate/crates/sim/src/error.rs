use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] irt_core::Error),

    #[error("invalid scenario: {0}")]
    InvalidSpec(String),

    /// The crowd region cannot hold the requested agents at minimum spacing.
    #[error("could only place {placed} of {requested} crowd agents without overlap")]
    Placement { requested: usize, placed: usize },

    #[error("invalid comparison: {0}")]
    Mismatch(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),
}

pub type SimResult<T> = std::result::Result<T, SimError>;
