use thiserror::Error;

/// Failure modes across the crate: bad model parameters, inputs that make a
/// quantity undefined, and numerically degenerate fits.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("invalid detector: {0}")]
    InvalidDetector(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested correlation has no defined value, e.g. because the mean
    /// count of the data is zero or negative.
    #[error("correlation of order {order} undefined: {reason}")]
    UndefinedCorrelation { order: u32, reason: String },

    /// An operation that needs a raw histogram was handed a signed
    /// (dark-subtracted) one.
    #[error("operation requires a raw histogram: {0}")]
    SignedHistogram(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
