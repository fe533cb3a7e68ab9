use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("unknown label '{0}' (expected strpos, pos, neg or strneg)")]
    Label(String),

    #[error("unknown POS tag '{0}'")]
    Tag(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("data error: {0}")]
    Data(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("shape error in {op}: {msg}")]
    Shape { op: &'static str, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dim { expected: usize, got: usize },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    pub fn shape(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Shape {
            op,
            msg: msg.into(),
        }
    }

    /// Process exit code: 2 for usage, config and input problems, 1 for
    /// failures that happen while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Label(_)
            | Error::Tag(_)
            | Error::Config(_)
            | Error::Data(_) => 2,
            Error::Fit(_) | Error::Numeric(_) | Error::Shape { .. } | Error::Dim { .. } => 1,
        }
    }
}
