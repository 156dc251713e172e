//! CLI error taxonomy and its mapping to process exit codes.

use riesne_core::Error as CoreError;

/// Exit codes: 0 success, 2 invalid arguments, 3 data errors, 4 numerical
/// failure.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(m) => CliError::Usage(m),
            CoreError::ManifoldMismatch(m) => CliError::Usage(format!("manifold mismatch: {m}")),
            CoreError::InvalidPoint(m) => CliError::Data(format!("invalid point: {m}")),
            CoreError::Antipodal { .. } => CliError::Data(e.to_string()),
            CoreError::Numerical(m) => CliError::Numerical(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
