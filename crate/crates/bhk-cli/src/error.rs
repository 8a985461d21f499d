use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("ceilings: {0}")]
    Ceilings(String),

    #[error(transparent)]
    Core(#[from] bhk_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
