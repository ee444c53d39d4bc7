use thiserror::Error;

/// CLI-level errors, each mapped to a process exit code:
/// 2 config, 3 I/O, 4 solver/domain.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("solver error: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Solver(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }
}

impl From<bswtv::Error> for CliError {
    fn from(e: bswtv::Error) -> Self {
        match e {
            bswtv::Error::InvalidArgument(m) => CliError::Config(m),
            bswtv::Error::NumericalDomain(m) | bswtv::Error::Solver(m) => CliError::Solver(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
