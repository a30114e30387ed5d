use alloc::string::String;

/// Failure categories shared by every pipeline stage.
///
/// The split mirrors how callers react: configuration errors mean the
/// request itself was wrong, data errors point at an offending input, and
/// training errors come out of model fitting.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("training error: {0}")]
    Training(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! config_err {
    ($($arg:tt)*) => { $crate::error::Error::Config(alloc::format!($($arg)*)) };
}

macro_rules! data_err {
    ($($arg:tt)*) => { $crate::error::Error::Data(alloc::format!($($arg)*)) };
}

macro_rules! training_err {
    ($($arg:tt)*) => { $crate::error::Error::Training(alloc::format!($($arg)*)) };
}

pub(crate) use config_err;
pub(crate) use data_err;
pub(crate) use training_err;
