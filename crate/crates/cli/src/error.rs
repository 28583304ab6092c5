use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid setting `{key}`: {reason}")]
    InvalidSetting { key: String, reason: String },
    #[error("cannot read config {path}: {source}")]
    ConfigFile { path: PathBuf, source: std::io::Error },
    #[error("malformed config {path}: {reason}")]
    ConfigSyntax { path: PathBuf, reason: String },
    #[error("grid is not rectangular: {0}")]
    RaggedGrid(String),
    #[error("{count} grid point(s) failed, first at {first}")]
    FailedRows { count: usize, first: String },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] qecs_core::Error),
}

impl CliError {
    pub fn setting(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::InvalidSetting {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownPreset(_)
            | CliError::InvalidSetting { .. }
            | CliError::ConfigFile { .. }
            | CliError::ConfigSyntax { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
