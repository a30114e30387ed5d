//! Feature matrix CSV (`segment` id column, then features in canonical
//! order) and its JSON column descriptor.

use std::path::Path;

use neurorank_core::features::{BandMode, BandTable, FeatureDescriptor, FeatureLayout, StatKind};
use neurorank_core::signal::SegmentKey;
use serde::{Deserialize, Serialize};

use crate::atomic::write_atomic;
use crate::error::{AppError, AppResult};
use crate::jsonl;

pub const FORMAT_VERSION: u32 = 1;

/// `user/task/judgment/paragraph`.
pub fn segment_id(key: &SegmentKey) -> String {
    format!("{}/{}/{}/{}", key.user, key.query, key.judgment, key.paragraph)
}

pub fn parse_segment_id(id: &str) -> AppResult<SegmentKey> {
    let parts: Vec<&str> = id.split('/').collect();
    match parts.as_slice() {
        [u, q, j, p] => Ok(SegmentKey::new(*u, *q, *j, *p)),
        _ => Err(AppError::data(format!(
            "segment id '{id}' is not of the form user/task/judgment/paragraph"
        ))),
    }
}

pub fn column_name(d: &FeatureDescriptor) -> String {
    let stat = match d.stat {
        StatKind::Max => "max",
        StatKind::Min => "min",
    };
    format!("t{}_{stat}_g{}_{}_{}", d.t, d.g, d.channel, d.band.name())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub version: u32,
    pub mode: BandMode,
    pub bands: BandTable,
    pub layout: FeatureLayout,
    pub columns: Vec<FeatureDescriptor>,
}

impl Descriptor {
    pub fn new(layout: FeatureLayout, mode: BandMode, bands: BandTable) -> Self {
        Self {
            version: FORMAT_VERSION,
            mode,
            bands,
            columns: layout.descriptors().collect(),
            layout,
        }
    }
}

/// Feature rows keyed by segment, in ascending key order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub rows: Vec<(SegmentKey, Vec<f64>)>,
}

impl FeatureTable {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn encode(&self) -> AppResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let internal = |e: csv::Error| AppError::Internal(e.to_string());
        w.write_record(std::iter::once("segment").chain(self.columns.iter().map(String::as_str)))
            .map_err(internal)?;
        for (key, values) in &self.rows {
            let mut rec = Vec::with_capacity(values.len() + 1);
            rec.push(segment_id(key));
            rec.extend(values.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(internal)?;
        }
        w.into_inner().map_err(|e| AppError::Internal(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> AppResult<()> {
        write_atomic(path, &self.encode()?)
    }

    pub fn read(path: &Path) -> AppResult<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| AppError::read(path, e))?;
        let header = r.headers().map_err(|e| AppError::read(path, e))?.clone();
        if header.get(0) != Some("segment") {
            return Err(AppError::data(format!("{}: first column must be 'segment'", path.display())));
        }
        let columns: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| AppError::read(path, e))?;
            let line = i + 2;
            let key = parse_segment_id(&rec[0]).map_err(|e| e.in_file(path))?;
            let values = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| AppError::data(format!("{} line {line}: {e}", path.display())))?;
            if values.len() != columns.len() {
                return Err(AppError::data(format!(
                    "{} line {line}: {} values for {} columns",
                    path.display(),
                    values.len(),
                    columns.len()
                )));
            }
            rows.push((key, values));
        }
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(AppError::data(format!(
                "{}: segment {} appears twice",
                path.display(),
                segment_id(&w[0].0)
            )));
        }
        Ok(Self { columns, rows })
    }

    pub fn get(&self, key: &SegmentKey) -> Option<&[f64]> {
        self.rows
            .binary_search_by(|(k, _)| k.cmp(key))
            .ok()
            .map(|i| self.rows[i].1.as_slice())
    }
}

pub fn write_descriptor(path: &Path, d: &Descriptor) -> AppResult<()> {
    write_atomic(path, &jsonl::encode_json(d)?)
}
