use std::fmt;
use std::path::Path;

use evbench_core::alignment::AlignmentError;
use evbench_core::report::EvalError;

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub const MISSING_FILE: i32 = 2;
    pub const NO_OVERLAP: i32 = 3;

    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn other(message: impl fmt::Display) -> Self {
        Self::new(1, message.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        Self::other(format!("{e:#}"))
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Alignment(AlignmentError::NoOverlap) => Self::new(Self::NO_OVERLAP, e.to_string()),
            e => Self::other(e),
        }
    }
}

pub fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::new(
            CliError::MISSING_FILE,
            format!("input file not found: {}", path.display()),
        ))
    }
}
