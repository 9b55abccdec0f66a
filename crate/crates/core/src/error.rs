use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::mbti::MbtiParseError;

/// Failure modes of a message policy. The engine downgrades all of these to
/// Silence and records an incident.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("script exhausted for agent {agent}")]
    Exhausted { agent: String },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed response: {0}")]
    Protocol(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mbti(#[from] MbtiParseError),
    #[error("config error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("numeric failure for agent {agent} at step {step}: {detail}")]
    Numeric {
        agent: String,
        step: u64,
        detail: String,
    },
    #[error("quantization collapsed every component to zero (Z = 0) at epsilon {epsilon}; use a smaller epsilon")]
    Quantization { epsilon: f64 },
    #[error("corpus rejected: {0}")]
    Corpus(String),
    #[error("insufficient data: {0}")]
    Stats(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 config/usage, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric { .. } | Error::Quantization { .. } => 3,
            Error::Io { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
