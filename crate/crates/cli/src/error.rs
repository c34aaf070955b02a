use std::path::Path;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("missing input {path}: {reason}")]
    MissingInput { path: String, reason: String },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] vtalarm::Error),
}

impl CliError {
    pub fn missing(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::MissingInput { path: path.display().to_string(), reason: err.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::MissingInput { .. } => "MissingInput",
            CliError::Config(_) => "ConfigError",
            CliError::Core(e) => e.kind(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingInput { .. } => 3,
            CliError::Core(_) => 1,
        }
    }

    /// Single-line JSON for stderr.
    pub fn json_line(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(vtalarm::Error::Io(e))
    }
}
