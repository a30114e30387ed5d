use std::path::Path;

/// Command failure, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) => 3,
            Self::Internal(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self::Data(msg.into())
    }

    /// Failure to read an input: the input is missing or unreadable.
    pub fn read(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Data(format!("{}: {err}", path.display()))
    }

    /// Failure to write an output.
    pub fn write(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Internal(format!("{}: {err}", path.display()))
    }

    /// Prefixes the message with the file it concerns.
    pub fn in_file(self, path: &Path) -> Self {
        let p = path.display();
        match self {
            Self::Config(m) => Self::Config(format!("{p}: {m}")),
            Self::Data(m) => Self::Data(format!("{p}: {m}")),
            Self::Internal(m) => Self::Internal(format!("{p}: {m}")),
        }
    }
}

impl From<neurorank_core::Error> for AppError {
    fn from(e: neurorank_core::Error) -> Self {
        use neurorank_core::Error as E;
        match e {
            E::Config(m) => Self::Config(m),
            // Training failures come from the data (e.g. a single class).
            E::Data(m) | E::Training(m) => Self::Data(m),
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
