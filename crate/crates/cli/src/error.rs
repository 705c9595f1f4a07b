use std::fmt;

use crate::config::ConfigError;

/// Failure of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Solver(_) => 2,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn io(what: &str, e: std::io::Error) -> Self {
        Self::Solver(format!("{what}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Solver(m) => write!(f, "solver error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<cdr_core::Error> for CliError {
    fn from(e: cdr_core::Error) -> Self {
        use cdr_core::Error as E;
        match e {
            E::DimensionMismatch(_) | E::SingularSystem(_) | E::SizeLimit { .. } | E::InvalidMatrix(_) => {
                Self::Solver(e.to_string())
            }
            _ => Self::Config(e.to_string()),
        }
    }
}
