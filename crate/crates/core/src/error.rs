use thiserror::Error;

/// Errors raised across the lab. Variants follow the failure classes of the
/// individual subsystems rather than the module that raised them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlatoonError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("config parse error at line {line}, key `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("no feasible green window: {0}")]
    Scheduling(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PlatoonError {
    fn from(err: std::io::Error) -> Self {
        PlatoonError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PlatoonError>;
