use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {path}: {message}")]
    Config { path: String, message: String },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Core(#[from] holozeno::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for configuration and input errors, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Parameter(_) | CliError::Read { .. } => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
