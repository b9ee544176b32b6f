use std::fmt;
use std::process::ExitCode;

/// Failure of a command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, dataset or arguments (exit 2).
    Config(String),
    /// Quadrature, budget or other numerical breakdown (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<lbtrunc::Error> for CliError {
    fn from(e: lbtrunc::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Exit codes: 0 success or PASS, 1 experiment FAIL, 2 configuration error,
/// 3 numerical failure.
pub fn exit_code(result: &Result<Option<bool>, CliError>) -> ExitCode {
    match result {
        Ok(Some(false)) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => ExitCode::from(e.exit_code()),
    }
}
