//! Error type shared by all modules.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A domain precondition on a parameter was violated.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A stream sample was NaN or infinite; the filter state is unchanged.
    #[error("non-finite sample at frame {frame}")]
    NonFiniteSample { frame: u64 },

    /// Requested kernel length cannot satisfy the tail-mass tolerance.
    #[error(
        "kernel length {given} too short for tail mass < {tolerance:e}; \
         need at least {required} samples"
    )]
    KernelTooShort {
        given: usize,
        required: usize,
        tolerance: f64,
    },

    /// Two time constants coincide, so the partial-fraction form is singular.
    #[error("time constants {a} and {b} too close (relative gap {gap:e})")]
    DuplicateTimeConstant { a: f64, b: f64, gap: f64 },

    /// Numeric quadrature could not reach the requested accuracy.
    #[error("quadrature did not converge: estimated error {error:e} > {tolerance:e}")]
    QuadratureDidNotConverge { error: f64, tolerance: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Empty, all-zero, or otherwise unusable input data.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Parse failure in an input file, with a 1-based line number.
    #[error("{}:{line}: {message}", path.display())]
    MalformedFile {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("unsupported format in {}: {message}", path.display())]
    UnsupportedFormat { path: PathBuf, message: String },

    /// A serialized filter state does not match the configured cascade.
    #[error("state does not match the configured cascade: {0}")]
    StateMismatch(String),

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
}

pub type Result<T> = std::result::Result<T, Error>;
