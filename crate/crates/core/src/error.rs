use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-integrable tail: {0}")]
    NonIntegrableTail(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge (estimate {estimate:e}, error {error:e})")]
    QuadratureFailure { estimate: f64, error: f64 },

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("classification is inconclusive (exponent {exponent:.4})")]
    Inconclusive { exponent: f64 },

    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),

    #[error("path exceeded {limit} events")]
    MaxEventsExceeded { limit: u64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn domain(reason: impl Into<String>) -> Error {
    Error::Domain(reason.into())
}
