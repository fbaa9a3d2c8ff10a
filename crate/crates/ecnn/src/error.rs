use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a {expected}, got {got}")]
    Dimension { expected: String, got: String },

    #[error("event stream is not sorted by tick (index {index})")]
    UnsortedStream { index: usize },

    #[error("event coordinates ({x},{y}) outside the 32x32 address space")]
    CoordOutOfRange { x: u8, y: u8 },

    #[error("bad IDX magic 0x{got:08x}, expected 0x{expected:08x}")]
    BadMagic { expected: u32, got: u32 },

    #[error("truncated payload: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },

    #[error("image file holds {images} samples but label file holds {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("event record length {len} is not a multiple of 5")]
    BadEventRecordLength { len: usize },

    #[error("invalid window: start {start} must be below end {end}")]
    InvalidWindow { start: u32, end: u32 },

    #[error("LFSR state 0 is a lockup state")]
    LfsrLockup,

    #[error("bad archive magic")]
    BadArchiveMagic,

    #[error("unsupported archive version {0}")]
    BadArchiveVersion(u8),

    #[error("archive length {got} does not match expected {expected}")]
    BadArchiveLength { expected: usize, got: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownConfigKey(String),

    #[error("config value out of range for `{key}`: {value}")]
    ConfigRange { key: String, value: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
