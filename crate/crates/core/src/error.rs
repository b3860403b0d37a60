use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} needs {needed} entries, budget cap is {cap} (raise HLAB_BUDGET to override)")]
    Budget {
        what: String,
        needed: u128,
        cap: u128,
    },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("evolution unstable: {0}")]
    Instability(String),

    #[error("Picard iteration does not contract: {0}")]
    NonContraction(String),

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
