//! Outputs are staged next to their destination and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::{NamedTempFile, TempDir};

use crate::error::{AppError, AppResult};

fn parent_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn ensure_dir(dir: &Path) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::write(dir, e))
}

/// Writes `bytes` to a temporary file beside `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = parent_of(path);
    ensure_dir(&dir)?;
    let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| AppError::write(path, e))?;
    tmp.write_all(bytes).map_err(|e| AppError::write(path, e))?;
    tmp.as_file().sync_all().map_err(|e| AppError::write(path, e))?;
    tmp.persist(path).map_err(|e| AppError::write(path, e.error))?;
    Ok(())
}

/// A directory built in a temporary sibling and swapped in on commit.
pub struct StagedDir {
    tmp: TempDir,
    dest: PathBuf,
}

impl StagedDir {
    pub fn new(dest: &Path) -> AppResult<Self> {
        let parent = parent_of(dest);
        ensure_dir(&parent)?;
        let tmp = tempfile::Builder::new()
            .prefix(".staging-")
            .tempdir_in(&parent)
            .map_err(|e| AppError::write(dest, e))?;
        Ok(Self {
            tmp,
            dest: dest.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        self.tmp.path()
    }

    /// Replaces `dest` with the staged contents.
    pub fn commit(self) -> AppResult<()> {
        if self.dest.exists() {
            fs::remove_dir_all(&self.dest).map_err(|e| AppError::write(&self.dest, e))?;
        }
        let staged = self.tmp.keep();
        fs::rename(&staged, &self.dest).map_err(|e| AppError::write(&self.dest, e))
    }
}
