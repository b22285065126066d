use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or unreadable input; exit code 2.
    #[error("{0}")]
    Input(String),
    /// A computation failed or a check did not pass; exit code 1.
    #[error("{0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        CliError::Numeric(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}
