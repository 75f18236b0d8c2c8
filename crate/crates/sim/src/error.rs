use std::path::PathBuf;

use wax_core::WaxError;

pub type Result<T, E = SimError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Core(#[from] WaxError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
}

impl SimError {
    /// Whether the failure came from the filesystem rather than the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, SimError::Io { .. } | SimError::Csv { .. } | SimError::Json { .. })
    }
}
