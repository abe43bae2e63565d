use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by field construction, the averaging operators and the
/// verification harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {value} at spatial index {spatial}, time index {time}")]
    NonFinite {
        spatial: usize,
        time: usize,
        value: f64,
    },

    #[error("data length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid exponent {0}: must be >= 1 or infinity")]
    InvalidExponent(f64),

    #[error("exponent r must be finite for this operation")]
    InfiniteExponent,

    #[error("window of {steps} steps leaves an empty domain on a grid of {points} points")]
    EmptyDomain { steps: usize, points: usize },

    #[error("window h = {h} is not a positive integer multiple of dt = {dt}")]
    WindowNotMultiple { h: f64, dt: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("axis {axis} invalid: {reason}")]
    InvalidAxis { axis: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("too few usable points for a fit: need {needed}, have {have}")]
    TooFewPoints { needed: usize, have: usize },

    #[error("malformed manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn manifest(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Manifest {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
