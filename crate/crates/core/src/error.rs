use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("alpha = {0} must lie in (-0.5, 0.5) with margin 1e-9")]
    AlphaOutOfRange(f64),

    #[error("tolerance {tol:e} unreachable: truncation index would exceed {limit}")]
    ToleranceUnreachable { tol: f64, limit: u64 },

    #[error("negative radicand {0:e} when assembling kappa2")]
    NegativeRadicand(f64),

    #[error("requested {requested} increments exceeds the cap of {cap}")]
    SizeOverflow { requested: usize, cap: usize },

    #[error("block factor {factor} does not divide {len} increments")]
    Divisibility { factor: usize, len: usize },

    #[error("duplicate index {0} in normal field request")]
    DuplicateIndex(u64),

    #[error("increments at resolution {got} but the scheme needs {expected}")]
    ResolutionMismatch { expected: String, got: String },

    #[error("drivers W and B must come from distinct streams")]
    StreamIdentity,

    #[error("paths are not coupled: {0}")]
    MismatchedPaths(String),

    #[error("time {0} is not a point of the coarse grid")]
    OffGrid(f64),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid sample set: {0}")]
    InvalidSamples(String),

    #[error("non-finite state at step {step} of path {path}")]
    BlowUp { path: u64, step: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
