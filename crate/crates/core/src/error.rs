use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite sample {value} at direction ({x}, {y}, {z})")]
    NonFinite { value: f64, x: f64, y: f64, z: f64 },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("cannot normalize illumination: {0}")]
    Normalization(String),

    #[error("least-squares solve failed: {0}")]
    Solver(String),

    #[error("missing buffer plane `{0}`")]
    MissingPlane(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("png: {0}")]
    Png(String),
}

impl Error {
    pub fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse { offset, message: message.into() }
    }

    pub fn argument(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }

    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
