use std::fmt;

/// Failure modes mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, configuration or input files (exit 2).
    Usage(String),
    /// Truncation could not be certified within the index cap (exit 3).
    Infeasible(String),
    /// Output could not be written (exit 2).
    Io(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Infeasible(msg) => write!(f, "{msg}"),
            CliError::Io(err) => write!(f, "{err:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mkz_core::Error> for CliError {
    fn from(err: mkz_core::Error) -> Self {
        match err {
            mkz_core::Error::TruncationInfeasible { .. } => CliError::Infeasible(err.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Io(err)
    }
}

pub type CliResult<T> = Result<T, CliError>;
