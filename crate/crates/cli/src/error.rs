use std::io;

use thiserror::Error;

use crate::config::ParseError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Parse(#[from] ParseError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl Into<String>, source: io::Error) -> CliError {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<hetnet_imc::Error> for CliError {
    fn from(e: hetnet_imc::Error) -> Self {
        match e {
            hetnet_imc::Error::InvalidParams(m) | hetnet_imc::Error::Config(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
