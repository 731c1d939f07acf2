//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index {index} outside stored range 0..={max}")]
    OutOfRange { index: i64, max: i64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("degenerate input at index {index}: {reason}")]
    Degenerate { index: i64, reason: String },
    #[error("horizon too small: best achieved bound {best_bound:e} at M={best_m}, requested tol {tol:e}")]
    HorizonTooSmall { best_bound: f64, best_m: usize, tol: f64 },
    #[error("unresolved spectrum: zero count did not stabilize (counts {counts:?})")]
    UnresolvedSpectrum { counts: Vec<usize>, partial: Vec<f64> },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("refused: estimated cost {estimate} exceeds cap {cap}")]
    CostCap { estimate: u64, cap: u64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Parse(_) | Error::OutOfRange { .. } => 2,
            Error::Unsupported(_) => 3,
            Error::HorizonTooSmall { .. } => 4,
            Error::UnresolvedSpectrum { .. } => 5,
            Error::Verification(_) => 6,
            _ => 1,
        }
    }
}
