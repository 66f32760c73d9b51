use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: a value out of range, a malformed or missing file.
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn from_core(e: maoa::Error, what: &str) -> Self {
        match e {
            maoa::Error::Io(io) => Self::from_io(io, what),
            other => CliError::Validation(format!("{what}: {other}")),
        }
    }

    pub fn from_io(e: io::Error, what: &str) -> Self {
        match e.kind() {
            io::ErrorKind::NotFound => CliError::Validation(format!("{what}: file not found")),
            _ => CliError::Io(format!("{what}: {e}")),
        }
    }
}

impl From<maoa::Error> for CliError {
    fn from(e: maoa::Error) -> Self {
        Self::from_core(e, "error")
    }
}

impl From<maoa_walks::Error> for CliError {
    fn from(e: maoa_walks::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::from_io(e, "io")
    }
}
