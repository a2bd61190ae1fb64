use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the detection pipeline and simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("injection outside the sampled band: {0}")]
    Band(String),

    #[error("frame length {got} does not match fft_len {expected}")]
    FrameLength { expected: usize, got: usize },

    #[error("frames are misaligned: {0}")]
    Alignment(String),

    #[error("input out of order: {0}")]
    Ordering(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("malformed data in {path}: {msg}")]
    Data { path: PathBuf, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// True for failures of the environment rather than of the input data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
