use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ReidError>;

#[derive(Debug, Error)]
pub enum ReidError {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("image decode error at {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("duplicate record: {0}")]
    DuplicateRecord(PathBuf),
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("image too small: {height}x{width}, need at least 16x8")]
    ImageTooSmall { height: u32, width: u32 },
    #[error("missing part label: {0}")]
    MissingPart(&'static str),
    #[error("empty region")]
    EmptyRegion,
    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("insufficient samples: {found} (need at least {needed})")]
    InsufficientSamples { found: usize, needed: usize },
    #[error("reduced dimension {k} too large (max {max})")]
    DimensionTooLarge { k: usize, max: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not a model file")]
    NotAModelFile,
    #[error("unsupported model file version {0}")]
    VersionMismatch(u32),
    #[error("checksum mismatch")]
    ChecksumMismatch,
    #[error("unexpected end of file")]
    UnexpectedEof,
    #[error("probe {0} has no match in gallery")]
    NoGalleryMatch(u32),
    #[error("config error: {0}")]
    Config(String),
}

impl ReidError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ReidError::Io {
            path: path.into(),
            source,
        }
    }
}
