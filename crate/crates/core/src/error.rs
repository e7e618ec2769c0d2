use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("population has zero mass")]
    ZeroMass,

    #[error("quantile search failed to bracket level {0}")]
    QuantileBracket(f64),

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("negative density {value:e} in cell {cell} at t = {t}")]
    NegativeDensity { cell: usize, value: f64, t: f64 },

    #[error("step failed at t = {t} after {retries} retries")]
    StepFailed { t: f64, retries: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stamps the simulation time on errors raised by time-agnostic kernels.
    pub fn at(self, time: f64) -> Self {
        match self {
            Error::NonFinite { .. } => Error::NonFinite { t: time },
            Error::NegativeDensity { cell, value, .. } => Error::NegativeDensity { cell, value, t: time },
            Error::StepFailed { retries, .. } => Error::StepFailed { t: time, retries },
            other => other,
        }
    }
}
