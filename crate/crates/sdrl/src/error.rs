use std::path::{Path, PathBuf};

/// Errors of the file and command layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] sdrl_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    /// Checksum, magic or version problems in a binary artifact.
    #[error("{}: {message}", path.display())]
    Integrity { path: PathBuf, message: String },
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Process exit status for each failure class.
pub mod exit {
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const TRAINING: i32 = 4;
    pub const IO: i32 = 5;
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn integrity(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        Error::Integrity {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    pub fn parse(path: impl AsRef<Path>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use sdrl_core::Error as E;
        match self {
            Error::Config(_) | Error::Core(E::Config(_)) => exit::CONFIG,
            Error::Core(E::Training(_)) => exit::TRAINING,
            Error::Io { .. } => exit::IO,
            Error::Core(_) | Error::Parse { .. } | Error::Integrity { .. } => exit::DATA,
        }
    }
}
