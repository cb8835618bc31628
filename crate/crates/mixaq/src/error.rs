//! Crate-wide error type and result alias.

use thiserror::Error;

/// Everything that can go wrong inside the library.
///
/// The variants are coarse on purpose: callers mostly care about the
/// distinction between "your inputs were bad" (configuration, calibration,
/// sampling, signal) and "the library broke its own bookkeeping" (internal).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid dimensions, ratios, schema fields, or other caller-supplied data.
    #[error("configuration error: {0}")]
    Config(String),

    /// A quantizer could not be fitted to the supplied samples.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// A signal-quality query on a reference with no energy.
    #[error("undefined signal: {0}")]
    UndefinedSignal(String),

    /// The rejection sampler gave up or was asked for the impossible.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// A broken internal invariant; always a bug, never user error.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end: usage and data
    /// problems exit 1, broken internal invariants exit 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 2,
            _ => 1,
        }
    }
}
