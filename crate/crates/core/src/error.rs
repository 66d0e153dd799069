use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A simulator produced NaN or infinity; `dump` is a human-readable
    /// snapshot of the offending state.
    #[error("non-finite value in {context}: {dump}")]
    NonFinite { context: String, dump: String },

    #[error("no convergence after {iterations} iterations (last value {last})")]
    NonConvergence { iterations: u64, last: f64 },

    #[error("intensity function is unbounded; a finite supremum is required")]
    UnboundedIntensity,

    #[error("event cap of {cap} exceeded at t = {t}")]
    EventCap { cap: u64, t: f64 },

    #[error("trace too short: {0}")]
    TooShort(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
