use thiserror::Error;

/// Command failure, partitioned by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 1.
    #[error("usage error: {0}")]
    Usage(String),
    /// Exit code 2.
    #[error("validation error: {0}")]
    Validation(String),
    /// Exit code 3.
    #[error("runtime error: {0}")]
    Runtime(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<artiscene::Error> for CliError {
    fn from(e: artiscene::Error) -> Self {
        use artiscene::Error as E;
        match e {
            E::Parse { .. }
            | E::Validation(_)
            | E::UnknownPart(_)
            | E::LimitViolation { .. }
            | E::InvalidArgument(_) => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
