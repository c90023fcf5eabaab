use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid token id {id} (vocabulary size {size})")]
    InvalidToken { id: u32, size: u32 },

    #[error("prompt contains the mask token at position {0}")]
    MaskInPrompt(usize),

    #[error("block index {index} out of range ({blocks} blocks)")]
    BlockIndex { index: usize, blocks: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty batch: no active positions")]
    EmptyBatch,

    #[error("training error: {0}")]
    Training(String),

    #[error("optimizer error: {0}")]
    Optimizer(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
