use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: usize, message: String },

    #[error("unsupported feature at byte {offset}: {feature}")]
    Unsupported { offset: usize, feature: String },

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("PRE value {pre} out of range (table has {len} nodes)")]
    Range { pre: usize, len: usize },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("server error {code}: {message}")]
    Server { code: String, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
