use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested value lies outside the range of the function being inverted.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("no asymptotic expansion is known for the `{0}` fading family")]
    UnsupportedFamily(String),

    #[error("mixture is not normalized: total mass {mass} (tolerance {tolerance})")]
    NotNormalized { mass: f64, tolerance: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("failed to parse mixture file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
