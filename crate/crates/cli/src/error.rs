use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("scenario validation error: {0}")]
    Validation(String),
    #[error("computation failed: {0}")]
    Compute(#[from] stopsum::Error),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().display().to_string(), source }
    }
}
