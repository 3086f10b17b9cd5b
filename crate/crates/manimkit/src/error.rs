use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum KitError {
    #[error(transparent)]
    Core(#[from] manimkit_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    /// A required external tool or directory is unavailable.
    #[error("environment error: {0}")]
    Environment(String),
    /// A video could not be decoded.
    #[error("media error: {0}")]
    Media(String),
    #[error("endpoint error: {0}")]
    Endpoint(String),
    #[error("dataset error: {0}")]
    Dataset(String),
}

pub type KitResult<T> = Result<T, KitError>;

pub(crate) fn io_err(path: impl AsRef<Path>) -> impl FnOnce(std::io::Error) -> KitError {
    let path = path.as_ref().to_path_buf();
    move |source| KitError::Io { path, source }
}
