use std::path::PathBuf;

use thiserror::Error;

/// Problems with the configuration file or its overrides. These are
/// detected before any stage runs.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("environment override {var}: {message}")]
    Override { var: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{field}: no such path {path}")]
    MissingPath { field: String, path: PathBuf },
}

impl ConfigError {
    pub(crate) fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { field: field.to_string(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    /// `stage` names the stage that has to run first.
    #[error("missing {artifact}; run stage {stage} first")]
    MissingUpstreamArtifact { stage: &'static str, artifact: PathBuf },
    #[error("stage {stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("stage {stage} failed: {source}")]
    Failed { stage: &'static str, source: Box<Error> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Error {
        Error::Format { path: path.into(), message: message.to_string() }
    }

    pub(crate) fn stage(stage: &'static str, message: impl ToString) -> Error {
        Error::Stage { stage, message: message.to_string() }
    }

    /// Process exit status: 2 for configuration problems, 3 for failures
    /// while a stage runs.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
