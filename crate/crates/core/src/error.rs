use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    #[error("length mismatch ({what}): {left} vs {right}")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("invalid word index map: {0}")]
    InvalidWordIndex(String),
    #[error("invalid sentence: {0}")]
    InvalidSentence(String),
    #[error("invalid manifest record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}
