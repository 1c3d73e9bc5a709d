use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is invalid. `field` names the offending key.
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("horizon exhausted at t = {horizon}")]
    HorizonExhausted { horizon: usize },

    #[error("estimate over an empty time set is undefined")]
    UndefinedEstimate,

    #[error("verification unavailable: {0}")]
    VerificationUnavailable(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Json(_) => 2,
            Error::Verification(_) | Error::VerificationUnavailable(_) => 3,
            Error::Resource(_) => 4,
            Error::HorizonExhausted { .. } | Error::UndefinedEstimate | Error::Io(_) => 1,
        }
    }
}
