use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] msqaoa::Error),

    #[error("data mismatch: {0}")]
    Mismatch(String),

    #[error("self-check failed\n{0}")]
    SelfCheck(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn parse(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        CliError::Parse {
            path: path.into(),
            message: msg.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for bad input, 3 for numerical failures, 4 for data that does not
    /// line up with the simulation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::SelfCheck(_) => 3,
            CliError::Mismatch(_) => 4,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a key path to core validation errors raised while resolving a
/// config section.
pub(crate) trait AtKey<T> {
    fn at(self, key: &str) -> CliResult<T>;
}

impl<T> AtKey<T> for msqaoa::Result<T> {
    fn at(self, key: &str) -> CliResult<T> {
        self.map_err(|e| {
            if e.is_numerical() {
                CliError::Core(e)
            } else {
                CliError::Config(format!("{key}: {e}"))
            }
        })
    }
}
