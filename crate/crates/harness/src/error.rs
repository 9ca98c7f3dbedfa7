use std::path::PathBuf;

use perfgame_core::GameError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Game(#[from] GameError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("invalid experiment config: {0}")]
    Config(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        HarnessError::Csv { path: path.into(), source }
    }

    /// Whether the error comes from malformed input rather than the game.
    pub fn is_usage(&self) -> bool {
        matches!(self, HarnessError::Config(_) | HarnessError::Game(GameError::Config(_)))
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
