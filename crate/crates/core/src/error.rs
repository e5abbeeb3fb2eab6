use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("label {label} at index {index} is not a valid state (state count {states})")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        states: usize,
    },

    #[error("length mismatch: predicted has {predicted} labels, actual has {actual}")]
    LengthMismatch { predicted: usize, actual: usize },

    #[error("window out of range: offset {offset} + length {window} exceeds sequence length {len}")]
    WindowOutOfRange {
        offset: usize,
        window: usize,
        len: usize,
    },

    #[error("state {0} has no observed outgoing transitions")]
    UnseenState(usize),

    #[error("{what} did not converge (residual {residual:e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("unsupported model version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            csv::ErrorKind::Deserialize { pos, err } => Error::Parse {
                path: pos.map_or_else(|| "csv".to_string(), |p| format!("csv line {}", p.line())),
                message: err.to_string(),
            },
            other => Error::Parse {
                path: "csv".to_string(),
                message: format!("{other:?}"),
            },
        }
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// I/O error annotated with the path it concerns.
    pub(crate) fn io_at(path: &std::path::Path, e: io::Error) -> Self {
        Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }

    /// Process exit code for this error: 1 validation, 2 I/O, 3 numerical.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io(_) => 2,
            Error::NonConvergence { .. } => 3,
            _ => 1,
        }
    }
}
