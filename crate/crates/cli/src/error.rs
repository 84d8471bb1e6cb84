use jcas_core::JcasError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Core(#[from] JcasError),

    #[error("{0}")]
    NonConvergence(String),

    #[error("verification failed: {0}")]
    Verify(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 0 success, 1 validation, 2 non-convergence in strict mode, 3 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Verify(_) => 1,
            CliError::Core(JcasError::Io { .. }) => 3,
            CliError::Core(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
