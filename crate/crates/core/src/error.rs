use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("orbit of length {requested} exceeds the truncation budget (max {max})")]
    Truncation { requested: usize, max: usize },

    #[error("point does not belong to the state space: {0}")]
    InvalidPoint(String),

    #[error("orbit lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("`{0}` must be positive")]
    NonPositive(&'static str),

    #[error("sample is empty")]
    EmptySample,

    #[error("{what}: instance of size {size} exceeds the limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(value: f64, name: &'static str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive(name))
    }
}
