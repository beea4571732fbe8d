use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A model, scenario or sweep was parameterised inconsistently.
    #[error("configuration error: {0}")]
    Config(String),
    /// Input data is unusable (non-finite entries, shape mismatch).
    #[error("data error: {0}")]
    Data(String),
    /// The operation needs something the input does not carry,
    /// e.g. retained mixture coefficients.
    #[error("capability error: {0}")]
    Capability(String),
    /// No theoretical prediction exists for the requested case.
    #[error("unsupported case: {0}")]
    Unsupported(String),
    /// A vector expected to be unit length was not.
    #[error("normalization error: {0}")]
    Normalization(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
