use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] prt_core::Error),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::File { path: path.into(), source }
    }

    /// 2 for usage, parse and file errors; 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use prt_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::File { .. } => 2,
            CliError::Core(E::Argument(_) | E::Parse { .. } | E::Config(_) | E::File { .. } | E::MissingPlane(_)) => 2,
            CliError::Core(E::Io(_)) => 2,
            CliError::Core(_) | CliError::Failed(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
