use thiserror::Error;

/// Failures that end a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Resource(_) => 4,
        }
    }

    /// Classifies a library error raised while solving.
    pub fn solver(e: mackey::Error) -> CliError {
        match e {
            mackey::Error::TooLarge { .. } => CliError::Resource(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }

    /// Classifies a library error raised while building objects from a
    /// config.
    pub fn config(context: &str, e: mackey::Error) -> CliError {
        CliError::Config(format!("{context}: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
