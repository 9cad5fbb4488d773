use std::fmt;
use std::path::PathBuf;

/// Errors raised by file IO and the command line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed file contents.
    #[error("{}format error at byte {offset}: {message}", path_prefix(.path))]
    Format { path: Option<PathBuf>, offset: usize, message: String },
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] sepaint_core::Error),
    /// Bad flags, config keys or flag combinations.
    #[error("{0}")]
    Usage(String),
}

fn path_prefix(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!("{}: ", p.display()),
        None => String::new(),
    }
}

impl Error {
    pub fn format(offset: usize, message: impl fmt::Display) -> Self {
        Error::Format { path: None, offset, message: message.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn at(self, file: &std::path::Path) -> Self {
        match self {
            Error::Format { path: None, offset, message } => {
                Error::Format { path: Some(file.to_path_buf()), offset, message }
            }
            other => other,
        }
    }

    /// Process exit code: 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Core(sepaint_core::Error::Usage(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
