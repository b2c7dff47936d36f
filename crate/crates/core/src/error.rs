use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix shapes do not line up (e.g. a permanent of a non-square matrix).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A parameter is outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An index or port lies outside the addressable range.
    #[error("out of bounds: {0}")]
    Bounds(String),

    /// The request exceeds a size limit (integer capacity, enumeration cap).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A bin-label source failed mid-draw. Never conflated with an ABORT
    /// outcome of the estimation algorithm.
    #[error("sample source error: {0}")]
    Source(String),

    /// One-way-function evaluation could not complete (retry budget spent).
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// A persisted artifact failed its checksum or consistency check.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
