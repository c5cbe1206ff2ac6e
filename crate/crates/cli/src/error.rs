use std::fmt;
use std::path::Path;

use serde::Serialize;

/// Exit-code class of a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Config,
    Input,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Input => 3,
            ErrorKind::Internal => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, thiserror::Error)]
pub struct CliError {
    pub kind: ErrorKind,
    pub stage: String,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error in {}: {}", self.kind.as_str(), self.stage, self.message)
    }
}

impl ErrorKind {
    fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Input => "input",
            ErrorKind::Internal => "internal",
        }
    }
}

impl CliError {
    pub fn new(kind: ErrorKind, stage: &str, message: impl Into<String>) -> Self {
        Self { kind, stage: stage.to_string(), message: message.into() }
    }

    pub fn config(stage: &str, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, stage, message)
    }

    pub fn input(stage: &str, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Input, stage, message)
    }

    pub fn internal(stage: &str, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Internal, stage, message)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// The JSON report printed on stderr.
    pub fn report(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Error mapping helpers for a stage.
pub(crate) trait StageExt<T> {
    fn input_err(self, stage: &str, what: &Path) -> CliResult<T>;
    fn data_err(self, stage: &str) -> CliResult<T>;
    fn internal_err(self, stage: &str) -> CliResult<T>;
}

impl<T, E: fmt::Display> StageExt<T> for Result<T, E> {
    /// A named input file could not be read or parsed.
    fn input_err(self, stage: &str, what: &Path) -> CliResult<T> {
        self.map_err(|e| CliError::input(stage, format!("{}: {e}", what.display())))
    }

    /// The inputs were readable but unusable.
    fn data_err(self, stage: &str) -> CliResult<T> {
        self.map_err(|e| CliError::input(stage, e.to_string()))
    }

    fn internal_err(self, stage: &str) -> CliResult<T> {
        self.map_err(|e| CliError::internal(stage, e.to_string()))
    }
}
