use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dense conversion refused: {pixels} pixels exceeds the limit of {limit}")]
    TooLargeForDense { pixels: usize, limit: usize },

    #[error("matrix is not symmetric: {0}")]
    Asymmetric(String),

    #[error("zero or negative diagonal at pixel {pixel}")]
    SingularSmoother { pixel: usize },

    #[error("no constrained pixels: the system L + gamma*C is singular")]
    Unconstrained,

    #[error("right-hand side is zero; normalized residual is undefined")]
    ZeroRhs,

    #[error("coarse-level factorization failed: operator is not positive definite")]
    NotPositiveDefinite,

    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("truncated payload in {path}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("unsupported bit depth in {path}: maxval {maxval} (only 255 is accepted)")]
    UnsupportedDepth { path: PathBuf, maxval: u32 },

    #[error("malformed run log {path}: {reason}")]
    MalformedLog { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
