//! File formats and pipeline commands on top of `neurorank-core`.

pub mod atomic;
pub mod cli;
pub mod commands;
pub mod config;
pub mod container;
pub mod error;
pub mod jsonl;
pub mod model_file;
pub mod sessions;
pub mod table;

pub use config::{Layout, Overrides, RunConfig};
pub use error::{AppError, AppResult};
