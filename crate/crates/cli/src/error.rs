use thiserror::Error;

/// Failures mapped onto the process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("no loop with negative action: {0}")]
    NoNegativeLoop(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(e: impl std::fmt::Display) -> Self {
        Self::Config(e.to_string())
    }

    pub fn io(context: &str, e: impl std::fmt::Display) -> Self {
        Self::Runtime(format!("{context}: {e}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Runtime(_) => 1,
            Self::Config(_) => 2,
            Self::NoNegativeLoop(_) => 4,
        }
    }
}

impl From<magloop::Error> for CliError {
    fn from(e: magloop::Error) -> Self {
        match e {
            magloop::Error::NoNegativeLoopFound(msg) => Self::NoNegativeLoop(msg),
            magloop::Error::InvalidParams(_) | magloop::Error::InvalidFamily(_) => {
                Self::Config(e.to_string())
            }
            other => Self::Runtime(other.to_string()),
        }
    }
}
