use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mode index {index} out of range for {n_modes} mode(s)")]
    ModeIndex { index: usize, n_modes: usize },

    #[error("invalid mode selection: {0}")]
    ModeSelection(String),

    #[error("shape mismatch: expected {expected} modes, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("singular evaluation: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
