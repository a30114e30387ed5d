//! Segment container: a directory holding `meta.json` and `samples.f32`
//! (little-endian `f32`, channel-major), or `samples.csv` with one row per
//! channel. An optional `events.jsonl` lists paragraph views to slice.

use std::fs;
use std::path::{Path, PathBuf};

use neurorank_core::signal::{EegSegment, SegmentKey, ViewEvent};
use neurorank_core::Matrix;
use serde::{Deserialize, Deserializer, Serialize};

use crate::atomic::{ensure_dir, write_atomic};
use crate::error::{AppError, AppResult};
use crate::jsonl;

pub const META_FILE: &str = "meta.json";
pub const SAMPLES_FILE: &str = "samples.f32";
pub const SAMPLES_CSV: &str = "samples.csv";
pub const EVENTS_FILE: &str = "events.jsonl";

/// Identifier that may be written as a JSON string or integer.
fn id<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        Text(String),
        Int(i64),
    }
    Ok(match Id::deserialize(d)? {
        Id::Text(s) => s,
        Id::Int(i) => i.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub channel_labels: Vec<String>,
    pub sample_rate_hz: f64,
    #[serde(deserialize_with = "id")]
    pub user: String,
    #[serde(deserialize_with = "id")]
    pub query: String,
    #[serde(deserialize_with = "id", default)]
    pub judgment: String,
    #[serde(deserialize_with = "id", default)]
    pub paragraph: String,
    pub dwell_seconds: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub preprocessed: bool,
}

impl Meta {
    pub fn of(segment: &EegSegment, preprocessed: bool) -> Self {
        let k = segment.key();
        Self {
            channel_labels: segment.channel_labels().to_vec(),
            sample_rate_hz: segment.sample_rate_hz(),
            user: k.user.clone(),
            query: k.query.clone(),
            judgment: k.judgment.clone(),
            paragraph: k.paragraph.clone(),
            dwell_seconds: segment.dwell_seconds(),
            preprocessed,
        }
    }

    pub fn key(&self) -> SegmentKey {
        SegmentKey::new(
            self.user.as_str(),
            self.query.as_str(),
            self.judgment.as_str(),
            self.paragraph.as_str(),
        )
    }

    /// Sample count implied by duration and rate.
    pub fn n_samples(&self) -> AppResult<usize> {
        let n = self.dwell_seconds * self.sample_rate_hz;
        let r = n.round();
        if !(r >= 0.0 && (n - r).abs() < 1e-6 * r.max(1.0)) {
            return Err(AppError::data(format!(
                "dwell_seconds {} at {} Hz is not a whole number of samples",
                self.dwell_seconds, self.sample_rate_hz
            )));
        }
        Ok(r as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub segment: EegSegment,
    pub preprocessed: bool,
    pub events: Option<Vec<ViewEvent>>,
}

fn samples_from_f32(path: &Path, ch: usize, n: usize) -> AppResult<Matrix> {
    let bytes = fs::read(path).map_err(|e| AppError::read(path, e))?;
    if bytes.len() != ch * n * 4 {
        return Err(AppError::data(format!(
            "{}: holds {} bytes but meta describes {ch} channels x {n} samples ({} bytes)",
            path.display(),
            bytes.len(),
            ch * n * 4
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
        .collect();
    Ok(Matrix::from_vec(ch, n, data).expect("length checked"))
}

fn samples_from_csv(path: &Path, ch: usize, n: usize) -> AppResult<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| AppError::read(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| AppError::read(path, e))?;
        let row = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| AppError::read(path, e))?;
        rows.push(row);
    }
    if rows.len() != ch || rows.iter().any(|r| r.len() != n) {
        return Err(AppError::data(format!(
            "{}: expected {ch} rows of {n} samples",
            path.display()
        )));
    }
    Ok(Matrix::from_rows(&rows).expect("checked"))
}

/// Reads a container directory.
pub fn read_container(dir: &Path) -> AppResult<Container> {
    let meta: Meta = jsonl::read_json(&dir.join(META_FILE))?;
    let n = meta.n_samples().map_err(|e| e.in_file(&dir.join(META_FILE)))?;
    let ch = meta.channel_labels.len();
    let bin = dir.join(SAMPLES_FILE);
    let samples = if bin.exists() {
        samples_from_f32(&bin, ch, n)?
    } else {
        samples_from_csv(&dir.join(SAMPLES_CSV), ch, n)?
    };
    let segment = EegSegment::new(meta.channel_labels.clone(), meta.sample_rate_hz, samples, meta.key())
        .map_err(|e| AppError::from(e).in_file(dir))?;
    let events_path = dir.join(EVENTS_FILE);
    let events = if events_path.exists() {
        Some(jsonl::read_jsonl(&events_path)?)
    } else {
        None
    };
    Ok(Container {
        segment,
        preprocessed: meta.preprocessed,
        events,
    })
}

pub fn encode_samples(segment: &EegSegment) -> Vec<u8> {
    let mut out = Vec::with_capacity(segment.samples().as_slice().len() * 4);
    for v in segment.samples().as_slice() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn encode_meta(segment: &EegSegment, preprocessed: bool) -> AppResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Meta::of(segment, preprocessed))
        .map_err(|e| AppError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes a container directory (created if needed).
pub fn write_container(dir: &Path, container: &Container) -> AppResult<()> {
    ensure_dir(dir)?;
    write_atomic(&dir.join(SAMPLES_FILE), &encode_samples(&container.segment))?;
    if let Some(events) = &container.events {
        write_atomic(&dir.join(EVENTS_FILE), &jsonl::encode_jsonl(events)?)?;
    }
    write_atomic(&dir.join(META_FILE), &encode_meta(&container.segment, container.preprocessed)?)
}

/// Every directory below `root` that contains a `meta.json`, sorted.
pub fn find_containers(root: &Path) -> AppResult<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(AppError::data(format!("input directory {} does not exist", root.display())));
    }
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| AppError::read(root, e))?;
        if entry.file_type().is_file() && entry.file_name() == META_FILE {
            out.push(entry.path().parent().expect("file has a parent").to_path_buf());
        }
    }
    Ok(out)
}

/// Relative container location for a segment key.
pub fn key_path(key: &SegmentKey) -> PathBuf {
    let part = |s: &str| if s.is_empty() { "_".to_string() } else { s.replace(['/', '\\'], "_") };
    [&key.user, &key.query, &key.judgment, &key.paragraph].iter().map(|s| part(s)).collect()
}
