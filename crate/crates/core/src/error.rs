use thiserror::Error;

pub type Result<T> = std::result::Result<T, JcasError>;

#[derive(Debug, Error)]
pub enum JcasError {
    /// A configuration value is out of range. The first field names the offending field.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("checksum mismatch: stored {stored}, computed {computed}")]
    Checksum { stored: String, computed: String },

    /// The water-filling Lagrangian is unbounded for this user: the dual
    /// multiplier does not exceed the user's sensing gain.
    #[error(
        "dual multiplier {beta:.6e} does not exceed sensing cost {sensing:.6e} for user {user}"
    )]
    BetaTooSmall {
        user: usize,
        beta: f64,
        sensing: f64,
    },

    #[error("could not bracket the power budget: {0}")]
    Bracket(String),

    #[error("ill-conditioned matrix for user {user}: condition number {cond:.3e}")]
    IllConditioned { user: usize, cond: f64 },

    #[error("oracle budget exceeded: {0}")]
    Budget(String),
}

impl JcasError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        JcasError::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
