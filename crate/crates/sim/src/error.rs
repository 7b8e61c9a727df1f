use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("word {word:?} is not valid for kind {kind}")]
    Vocabulary { kind: &'static str, word: String },
    #[error("unknown token kind {0:?}")]
    UnknownKind(String),
    #[error("unknown direction {0:?}")]
    UnknownDirection(String),
    #[error("object at ({x}, {y}) lies outside the {width}x{height} grid")]
    OutOfBounds { x: i64, y: i64, width: i64, height: i64 },
    #[error("malformed state document: {0}")]
    Malformed(String),
    #[error("label map is not a bijection over property words (at {0:?})")]
    NotBijective(String),
    #[error("cannot read level {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
