use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid depth {0}: must be finite and positive")]
    InvalidDepth(f64),

    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),

    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("invalid rigid pose: {0}")]
    InvalidPose(String),

    #[error("dimension mismatch: {what} is {got:?}, expected {expected:?}")]
    DimensionMismatch {
        what: &'static str,
        got: (usize, usize),
        expected: (usize, usize),
    },

    #[error("degenerate depth fit: {0}")]
    DegenerateFit(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate synthetic scene: {0}")]
    DegenerateScene(String),

    #[error("degenerate plane homography: {0}")]
    DegenerateHomography(String),

    #[error("gap mask covers the whole image, nothing to fill from")]
    NothingToFill,

    #[error("failed to load view `{view_id}`: {reason}")]
    Load { view_id: String, reason: String },

    #[error("reference resolution failed: {0}")]
    Reference(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed {kind} file {path}: {reason}")]
    Format {
        kind: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
