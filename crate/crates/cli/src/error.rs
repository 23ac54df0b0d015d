//! Driver-side error type: solver failures plus file and configuration
//! problems. Anything here exits the process with status 1; running out of
//! fixed-point iterations is not an error and exits with status 2 instead.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum Error {
    Solver(porodarcy_core::Error),
    Io { path: PathBuf, source: io::Error },
    /// Configuration text that does not parse or type-check.
    Config { line: usize, message: String },
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Solver(e) => write!(f, "{e}"),
            Error::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Error::Config { line, message } => write!(f, "config line {line}: {message}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Solver(e) => Some(e),
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<porodarcy_core::Error> for Error {
    fn from(e: porodarcy_core::Error) -> Self {
        Error::Solver(e)
    }
}

pub(crate) fn io_err(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
