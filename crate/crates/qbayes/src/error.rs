use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error(transparent)]
    Core(#[from] qbayes_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: estimate violates physicality by {violation:.3e} (tolerance {tolerance:.0e})")]
    Unphysical {
        path: PathBuf,
        violation: f64,
        tolerance: f64,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl Error {
    /// Stable identifier for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(_) => "numerical",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Format { .. } => "format",
            Error::Unphysical { .. } => "unphysical",
            Error::Config(_) => "config",
            Error::Pool(_) => "pool",
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
