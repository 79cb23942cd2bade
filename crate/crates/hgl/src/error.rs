use std::io;
use std::path::{Path, PathBuf};

use hgl_core::blocking::BlockingError;
use hgl_core::denoiser::DenoiserError;
use hgl_core::evaluation::EvalError;
use hgl_core::training::TrainingError;

/// A line-numbered parse failure inside one file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// 1 for usage errors, 2 for bad or missing data, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } | Error::Parse { .. } | Error::Data(_) => 2,
            Error::Numeric(_) => 3,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, source: ParseError) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<TrainingError> for Error {
    fn from(e: TrainingError) -> Self {
        match e {
            TrainingError::BadConfig(_) => Error::Usage(e.to_string()),
            TrainingError::NonFiniteGradient { .. } | TrainingError::Denoiser(DenoiserError::NonFinite) => {
                Error::Numeric(e.to_string())
            }
            _ => Error::Data(e.to_string()),
        }
    }
}

impl From<DenoiserError> for Error {
    fn from(e: DenoiserError) -> Self {
        match e {
            DenoiserError::NonFinite => Error::Numeric(e.to_string()),
            _ => Error::Data(e.to_string()),
        }
    }
}

impl From<BlockingError> for Error {
    fn from(e: BlockingError) -> Self {
        match e {
            BlockingError::Training(t) => t.into(),
            BlockingError::BadFraction(_) => Error::Usage(e.to_string()),
            _ => Error::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for Error {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::NonFiniteScore(_) => Error::Numeric(e.to_string()),
            _ => Error::Data(e.to_string()),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
