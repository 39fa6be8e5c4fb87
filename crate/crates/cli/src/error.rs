use std::path::PathBuf;

use thiserror::Error;

/// Everything that ends a run early, each mapped to one exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Engine(#[from] regime_lookback::Error),
    #[error("validation disagreement: {0}")]
    Disagreement(String),
}

impl CliError {
    /// 2 for bad input, 3 for numerical trouble, 4 for oracle disagreement.
    pub fn exit_code(&self) -> u8 {
        use regime_lookback::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Engine(E::Validation { .. } | E::MissingParameter(_)) => 2,
            CliError::Engine(E::NumericalDomain(_) | E::NumericalFailure(_)) => 3,
            CliError::Disagreement(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
