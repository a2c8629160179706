use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the laboratory.
///
/// Variants are grouped so that callers (the CLI in particular) can map them
/// onto configuration, data and numeric failure classes via [`Error::class`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dataset must contain both labels 0 and 1")]
    SingleClass,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("class {0} not present in dataset")]
    ClassAbsent(u8),

    #[error("insufficient samples for class {class}: need {needed}, have {available}")]
    InsufficientSamples {
        class: u8,
        needed: usize,
        available: usize,
    },

    #[error("bad IDX magic in {path}: expected {expected}, found {found}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("truncated file {path}: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("image/label count mismatch: {images} images, {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("gradient vanished at a non-boundary point (margin {margin})")]
    Stall { margin: f64 },

    #[error("segment endpoints have the same margin sign ({a}, {b})")]
    SameSign { a: f64, b: f64 },

    #[error("sample {index} is misclassified by the network")]
    Misclassified { index: usize },

    #[error("no sign change of the margin inside the search bounds")]
    NoCrossing,

    #[error("unsupported layout kind for this operation: {0}")]
    UnsupportedLayout(String),

    #[error("zero-norm vector at index {0}")]
    ZeroNorm(usize),

    #[error("experiment aborted: {0}")]
    Aborted(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse failure class, used for exit-code mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_) | Error::UnsupportedLayout(_) => ErrorClass::Config,
            Error::EmptyDataset
            | Error::SingleClass
            | Error::InvalidDataset(_)
            | Error::ClassAbsent(_)
            | Error::InsufficientSamples { .. }
            | Error::BadMagic { .. }
            | Error::Truncated { .. }
            | Error::CountMismatch { .. }
            | Error::Checkpoint(_)
            | Error::VersionMismatch { .. }
            | Error::Io { .. }
            | Error::Json(_) => ErrorClass::Data,
            Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::Divergence { .. }
            | Error::Stall { .. }
            | Error::SameSign { .. }
            | Error::Misclassified { .. }
            | Error::NoCrossing
            | Error::ZeroNorm(_)
            | Error::Aborted(_) => ErrorClass::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
