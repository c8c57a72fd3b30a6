use std::path::{Path, PathBuf};

use sephill::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    FailureCap(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Numeric(_) => 4,
            CliError::FailureCap(_) => 5,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::DegenerateSample(_)
            | Error::NotConverged { .. }
            | Error::SingularIterate { .. }
            | Error::NonPositivePivot { .. }
            | Error::NonPositiveDistance { .. }
            | Error::NonFinite { .. } => CliError::Numeric(msg),
            Error::FailureCap { .. } => CliError::FailureCap(msg),
            _ => CliError::Config(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
