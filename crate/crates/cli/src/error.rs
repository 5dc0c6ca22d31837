use std::fmt;
use std::path::Path;

/// Failures that end the process, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input. Exit code 2.
    Input(String),
    /// Training or scoring produced non-finite values. Exit code 3.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// Prefixes the message with the file it came from.
    pub fn at(self, path: &Path) -> Self {
        let p = path.display();
        match self {
            CliError::Input(m) => CliError::Input(format!("{p}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("{p}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<dagforge_core::Error> for CliError {
    fn from(e: dagforge_core::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
