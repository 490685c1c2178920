use thiserror::Error;

/// Errors raised while constructing measures, kernels and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measure field `{field}`: {reason}")]
    InvalidMeasure { field: String, reason: String },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("map failed bi-Lipschitz certification: {0}")]
    LipschitzCertification(String),

    #[error("bound violation: {0}")]
    BoundViolation(String),

    #[error("score undefined at x = {x}: smoothed density underflows")]
    OutOfSupport { x: f64 },

    #[error("malformed measure spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn measure(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidMeasure {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
