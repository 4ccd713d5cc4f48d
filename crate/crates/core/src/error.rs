use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the inversion pipeline.
#[derive(Debug, Error)]
pub enum AaiError {
    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate dimension {dim}: std {std:e} below 1e-8")]
    DegenerateDimension { dim: usize, std: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("coverage error: frame at {t_s:.4} s is not covered by any segment")]
    Coverage { t_s: f64 },

    #[error("too small: {0}")]
    TooSmall(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("{} file(s) failed:\n{}", .0.len(), .0.join("\n"))]
    Diagnostics(Vec<String>),

    #[error("unknown id: {0}")]
    UnknownId(String),

    #[error("missing forward cache: {0}")]
    MissingCache(&'static str),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}: {msg}")]
    Diverged { epoch: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, AaiError>;

impl AaiError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AaiError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        AaiError::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            AaiError::Config(_) => 1,
            AaiError::NonFinite(_) | AaiError::Diverged { .. } => 3,
            _ => 2,
        }
    }
}
