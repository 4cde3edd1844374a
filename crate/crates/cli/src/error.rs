use std::fmt;
use std::process::ExitCode;

use dikin_core::Error;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Verification(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::Dimension { .. }
            | Error::NotInterior { .. }
            | Error::BoundaryPoint
            | Error::EmptyInput(_)
            | Error::Unsupported(_)
            | Error::Io(_)
            | Error::Json(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
