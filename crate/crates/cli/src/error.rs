use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] bvs_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) => e.kind(),
            CliError::Io(_) => "io",
        }
    }

    /// 2 for bad configuration or arguments, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(bvs_core::Error::Config(_) | bvs_core::Error::InvalidArgument(_)) => 2,
            CliError::Core(_) | CliError::Io(_) => 3,
        }
    }

    pub fn record(&self) -> String {
        json!({ "schema": 1, "error": { "kind": self.kind(), "message": self.to_string() } }).to_string()
    }
}
