use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("covariance factorization failed: {0}")]
    Factorization(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("product is not integrable: {0}")]
    NonIntegrable(String),
    #[error("integrability certificate failed: {0}")]
    CertificateFailed(String),
    #[error("degenerate sampling: {0}")]
    DegenerateSampling(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
