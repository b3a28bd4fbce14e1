use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Every offending field, one message each.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Core(#[from] ici_core::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Short machine-readable kind for the failure record.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(_) => "computation",
            CliError::Io { .. } => "io",
            CliError::Json(_) | CliError::Csv(_) => "output",
            CliError::Pool(_) => "threads",
        }
    }

    pub fn messages(&self) -> Vec<String> {
        match self {
            CliError::Config(v) => v.clone(),
            e => vec![e.to_string()],
        }
    }
}
