use thiserror::Error;

/// Errors raised anywhere in the pipeline. Each variant maps to a stable
/// process exit code through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown system `{name}`; valid names: {valid}")]
    UnknownSystem { name: String, valid: String },

    #[error("stability bound violated: {0}")]
    Stability(String),

    #[error("integration diverged at step {step} (realization {realization}): |state| > {bound}")]
    Divergence {
        realization: usize,
        step: usize,
        bound: f64,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unsupported form: {0}")]
    Unsupported(String),

    #[error("discovery failed: {0}")]
    Discovery(String),

    #[error("undefined error metric: {0}")]
    UndefinedMetric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// 0 ok; 2 config; 3 stability; 4 IO; 5 discovery failure; 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::UnknownSystem { .. } => 2,
            Error::Stability(_) | Error::Divergence { .. } => 3,
            Error::Io { .. } | Error::Schema(_) | Error::Serde(_) => 4,
            Error::Discovery(_) | Error::Unsupported(_) => 5,
            Error::Numerical(_) | Error::UndefinedMetric(_) => 1,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
