use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma must be non-negative (got {0})")]
    NonPositiveGamma(f64),

    #[error("delay must be non-negative (got {0})")]
    NegativeDelay(f64),

    #[error("{0} is not finite")]
    NonFiniteField(&'static str),

    #[error("time must be finite and non-negative (got {0})")]
    NonFiniteTime(f64),

    #[error("time {t} outside the window [{lo}, {hi}]")]
    TimeOutOfWindow { t: f64, lo: f64, hi: f64 },

    #[error("operation requires a strictly positive delay")]
    DegenerateDelay,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("invalid qubit state: {0}")]
    InvalidState(String),

    #[error("amplitude modulus {0} exceeds 1")]
    AmplitudeTooLarge(f64),
}
