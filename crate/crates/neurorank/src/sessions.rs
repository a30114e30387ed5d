//! Session logs (`sessions/*.jsonl`, each line carrying `user`, `task` and
//! a `type`-tagged event) and per-task label files (`labels/<task>.json`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use neurorank_core::rerank::TaskLabels;
use neurorank_core::sim::{SessionEvent, SessionLog};
use serde::{Deserialize, Serialize};

use crate::atomic::write_atomic;
use crate::error::{AppError, AppResult};
use crate::jsonl;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub user: String,
    pub task: String,
    #[serde(flatten)]
    pub event: SessionEvent,
}

fn files_with_ext(dir: &Path, ext: &str) -> AppResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| AppError::read(dir, e))?;
    let mut out = Vec::new();
    for e in entries {
        let p = e.map_err(|e| AppError::read(dir, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == ext) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Reads every `*.jsonl` under `dir`; lines are grouped by `(user, task)`
/// keeping their file order. Logs come back sorted by user, then task.
pub fn read_sessions(dir: &Path) -> AppResult<Vec<SessionLog>> {
    let mut logs: BTreeMap<(String, String), SessionLog> = BTreeMap::new();
    for path in files_with_ext(dir, "jsonl")? {
        let lines: Vec<LogLine> = jsonl::read_jsonl(&path)?;
        for l in lines {
            logs.entry((l.user.clone(), l.task.clone()))
                .or_insert_with(|| SessionLog::new(l.user.as_str(), l.task.as_str(), Vec::new()))
                .events
                .push(l.event);
        }
    }
    let logs: Vec<SessionLog> = logs.into_values().collect();
    for log in &logs {
        log.validate().map_err(|e| AppError::from(e).in_file(dir))?;
    }
    Ok(logs)
}

pub fn encode_session(log: &SessionLog) -> AppResult<Vec<u8>> {
    let lines: Vec<LogLine> = log
        .events
        .iter()
        .map(|e| LogLine {
            user: log.user.clone(),
            task: log.task.clone(),
            event: e.clone(),
        })
        .collect();
    jsonl::encode_jsonl(&lines)
}

pub fn session_file_name(log: &SessionLog) -> String {
    format!("{}_{}.jsonl", log.user, log.task)
}

/// Reads `labels/*.json`, keyed by task id.
pub fn read_labels(dir: &Path) -> AppResult<BTreeMap<String, TaskLabels>> {
    let mut out = BTreeMap::new();
    for path in files_with_ext(dir, "json")? {
        let labels: TaskLabels = jsonl::read_json(&path)?;
        labels.validate().map_err(|e| AppError::from(e).in_file(&path))?;
        if out.insert(labels.task.clone(), labels).is_some() {
            return Err(AppError::data(format!("{}: duplicate labels for a task", path.display())));
        }
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &TaskLabels) -> AppResult<()> {
    write_atomic(path, &jsonl::encode_json(labels)?)
}
