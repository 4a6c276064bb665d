//! Command implementations behind the `covert-qmac` binary.

pub mod commands;
pub mod output;
pub mod spec;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input.
    #[error("parse error: {0}")]
    Parse(String),
    /// Input parsed but the request failed on its merits.
    #[error("{0}")]
    Domain(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<covert_qmac::Error> for CliError {
    fn from(e: covert_qmac::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}
