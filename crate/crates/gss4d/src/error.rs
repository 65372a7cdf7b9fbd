use thiserror::Error;

/// Unified error type for constellation construction, DSP, estimation, and
/// experiment orchestration.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented domain restriction.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value (or combination) is unusable.
    #[error("config error: {0}")]
    Config(String),

    /// A quantity that must be nonzero/finite for the operation degenerated.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A statistical estimate was requested from too little data.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A constellation file failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The adaptive split-step controller could not satisfy its phase bound.
    #[error("step-size underflow: {0}")]
    StepUnderflow(String),

    /// Filesystem or serialization failure while persisting results.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure in persisted artifacts.
    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// TOML configuration parse failure.
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
