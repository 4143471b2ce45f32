use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("size mismatch: header implies {expected} bytes, data file has {actual}")]
    SizeMismatch { expected: u64, actual: u64 },

    #[error("unsupported format_version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("archive format error: {0}")]
    Format(String),

    #[error("manifest has {manifest} samples but archive has {archive}")]
    ManifestMismatch { manifest: usize, archive: usize },

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// CLI exit code: 1 validation failure, 2 I/O error, 3 bad arguments.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::InvalidInput(_) => 3,
            _ => 1,
        }
    }
}
