//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The cardinality of a requested index set does not fit the platform's
    /// index range.
    #[error("index set cardinality C({}, {p}) exceeds the platform index range", d + p)]
    IndexSetCapacity { d: usize, p: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A Gram matrix failed its symmetric-positive-definite check.
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    /// Power iteration did not meet its tolerance; `best` is the last
    /// Rayleigh quotient seen.
    #[error("spectral norm estimate did not converge after {iterations} iterations (best estimate {best:.6e})")]
    SpectralNormStalled { iterations: usize, best: f64 },

    /// Brute-force enumeration was asked for a problem size it refuses.
    #[error("enumeration limit exceeded: {0}")]
    EnumerationLimit(String),

    /// Diffusion coefficient positivity could not be certified over the
    /// parameter cube.
    #[error("coefficient positivity cannot be certified: worst-case lower bound {lower_bound:.6} must exceed {required:.6}")]
    NonPositiveCoefficient { lower_bound: f64, required: f64 },

    /// Least squares needs at least as many samples as basis functions.
    #[error("least squares requires m >= N, got m = {m}, N = {n}")]
    Underdetermined { m: usize, n: usize },

    /// Continuation over the penalty weight could not meet the residual
    /// target.
    #[error("continuation failed to reach residual target {target:.6e}; best residual {best:.6e}")]
    ContinuationStalled { target: f64, best: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
