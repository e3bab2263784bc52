use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular affine transform (det = {0})")]
    SingularAffine(f64),
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),
    #[error("overlapping ROIs {0} and {1} at voxel {2:?}")]
    OverlappingRois(u32, u32, [usize; 3]),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty seed mask")]
    EmptySeedMask,
    #[error("empty tractogram")]
    EmptyTractogram,
    #[error("empty bundle mask for bundle {0}")]
    EmptyBundleMask(usize),
    #[error("training diverged: {0}")]
    NonFinite(String),
    #[error("factor matrix is not positive definite after {0} damping retries")]
    NotPositiveDefinite(usize),
    #[error("malformed {format} file: {reason}")]
    Format { format: &'static str, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    RawIo(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            format,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
