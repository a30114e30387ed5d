use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{AppError, AppResult};

/// Parses one JSON value per non-blank line; errors name the line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> AppResult<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| AppError::read(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| AppError::data(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn encode_jsonl<T: Serialize>(items: &[T]) -> AppResult<Vec<u8>> {
    let mut out = Vec::new();
    for it in items {
        serde_json::to_writer(&mut out, it).map_err(|e| AppError::Internal(e.to_string()))?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::read(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::read(path, e))
}

pub fn encode_json<T: Serialize>(value: &T) -> AppResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| AppError::Internal(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}
