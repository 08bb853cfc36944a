use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("orbit diverged at step {step}")]
    OrbitDiverged { step: u64 },

    #[error("{diverged} of {total} ensemble members diverged (limit {limit})")]
    TooManyDiverged {
        diverged: usize,
        total: usize,
        limit: usize,
    },

    #[error("product/base inclusion violated by {count} samples")]
    InclusionViolated { count: u64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit status: 2 schema, 3 divergence, 4 I/O, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::OrbitDiverged { .. } | Error::TooManyDiverged { .. } => 3,
            Error::Io(_) => 4,
            Error::InclusionViolated { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::OrbitDiverged { .. } => "orbit-diverged",
            Error::TooManyDiverged { .. } => "too-many-diverged",
            Error::InclusionViolated { .. } => "inclusion-violated",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    /// Machine-readable error record.
    pub fn record(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}
