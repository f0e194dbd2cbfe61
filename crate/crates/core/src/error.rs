use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty reduction")]
    EmptyReduction,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("insufficient negatives: batch of {0} rows, need at least 2")]
    InsufficientNegatives(usize),
    #[error("normalization of a near-zero vector (norm {0:e})")]
    ZeroNorm(f64),
    #[error("non-finite loss at epoch {epoch}, step {step}: {loss}")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        loss: f64,
    },
    #[error("insufficient rows: requested {requested}, available {available}")]
    InsufficientRows { requested: usize, available: usize },
    #[error("sample too small: {0} rows, need at least 10")]
    SampleTooSmall(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised while decoding the binary embedding container.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown dtype tag {0}")]
    UnknownDtype(u8),
    #[error("truncated header")]
    TruncatedHeader,
    #[error("name is not valid UTF-8")]
    BadName,
    #[error("payload length mismatch: expected {expected} bytes, found {found}")]
    PayloadLengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("malformed text input at line {line}: {reason}")]
    BadText { line: usize, reason: String },
}

impl Error {
    /// Short machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyReduction => "empty_reduction",
            Error::Domain(_) => "domain",
            Error::Shape(_) => "shape",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::NonFiniteGradient => "non_finite_gradient",
            Error::NonFinite(_) => "non_finite",
            Error::InsufficientNegatives(_) => "insufficient_negatives",
            Error::ZeroNorm(_) => "zero_norm",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::InsufficientRows { .. } => "insufficient_rows",
            Error::SampleTooSmall(_) => "sample_too_small",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Format(_) => "format",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
