use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} = {value} is not a nonnegative integer multiple of the grid step {step}")]
    NotAligned {
        what: &'static str,
        value: f64,
        step: f64,
    },

    #[error("point (s = {s}, y = {y}) lies outside the grid")]
    OutOfDomain { s: f64, y: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("cumulant argument {z} outside the validated window [{lo}, {hi}]")]
    CumulantWindow { z: f64, lo: f64, hi: f64 },

    #[error("horizon {horizon} reaches stale (extrapolated) rows; only the first {valid} rows are genuine")]
    StaleRegion { horizon: f64, valid: usize },

    #[error("time overflow: {t} + {dt} exceeds end time {t_end}")]
    TimeOverflow { t: f64, dt: f64, t_end: f64 },

    #[error("operation requires {expected} mode")]
    WrongMode { expected: &'static str },

    #[error("insufficient paths: need at least {needed}, have {have}")]
    InsufficientPaths { needed: usize, have: usize },

    #[error("query not recorded: {0}")]
    MissingQuery(String),

    #[error("empty sample")]
    EmptySample,

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by unreadable or inconsistent input rather than
    /// by a numerical domain violation during a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Parse(_)
                | Error::Io(_)
                | Error::NotAligned { .. }
                | Error::GridMismatch(_)
                | Error::GridTooSmall(_)
                | Error::WrongMode { .. }
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
