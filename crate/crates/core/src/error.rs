use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the segmentation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file: {0}")]
    Format(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },
    #[error("matrix is not positive semidefinite")]
    NotPositiveSemidefinite,
    #[error("unknown region {0}")]
    UnknownRegion(u32),
    #[error("region {0} is not 4-connected")]
    DisconnectedRegion(u32),
    #[error("region {region} has an empty interior at window size {window}")]
    DegenerateRegion { region: u32, window: usize },
    #[error("regions {0} and {1} are not adjacent")]
    NotAdjacent(u32, u32),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("quadratic fit rejected: leading coefficient {0} is not positive")]
    NonConvexFit(f64),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
