use std::fmt;

use phylocoal::{Error, ErrorClass};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.class() {
                ErrorClass::Data => 3,
                ErrorClass::Numerical => 4,
                ErrorClass::Io => 5,
            },
        }
    }

    pub fn class(&self) -> &'static str {
        match self.exit_code() {
            2 => "usage",
            3 => "data",
            4 => "numerical",
            _ => "io",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        };
        // one line, whatever the source message looks like
        write!(f, "error[{}]: {}", self.class(), msg.replace('\n', " "))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(m),
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

/// Attach a path to IO failures.
pub fn with_path<T>(r: std::io::Result<T>, path: &std::path::Path) -> Result<T, CliError> {
    r.map_err(|e| CliError::Core(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}
