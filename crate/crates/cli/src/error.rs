use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] omav::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    RunFailed(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        use omav::Error as E;
        match self {
            CliError::Core(E::Config(_) | E::InvalidParams(_) | E::InvalidGains(_) | E::Unsupported(_)) => "config",
            CliError::Core(E::NominalFailed(_) | E::AllSamplesFailed(_)) => "run-failed",
            CliError::Core(_) => "model",
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => "io",
            CliError::Usage(_) => "usage",
            CliError::RunFailed(_) => "run-failed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" | "config" => 2,
            "io" => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
