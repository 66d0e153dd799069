use thiserror::Error;

/// Failure classes, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<popdyn::Error> for CliError {
    fn from(e: popdyn::Error) -> Self {
        use popdyn::Error as E;
        match e {
            E::InvalidParameter(_) | E::UnboundedIntensity | E::TooShort(_) => CliError::Config(e.to_string()),
            E::Io(io) => CliError::Io(io.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
