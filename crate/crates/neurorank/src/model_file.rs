use std::path::Path;

use neurorank_core::features::{BandMode, StatConfig};
use neurorank_core::model::{LinearModel, ParagraphClassifier, RfeConfig, Scaler};
use serde::{Deserialize, Serialize};

use crate::atomic::write_atomic;
use crate::error::{AppError, AppResult};
use crate::jsonl;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfigEcho {
    pub rfe: RfeConfig,
    pub mode: BandMode,
    pub features: StatConfig,
}

/// Trained paragraph classifier as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_mask: Vec<usize>,
    /// Column names of the surviving features, aligned with `weights`.
    pub feature_names: Vec<String>,
    pub source_dim: usize,
    pub scaler: Scaler,
    pub config: ModelConfigEcho,
}

impl ModelFile {
    pub fn new(clf: &ParagraphClassifier, columns: &[String], config: ModelConfigEcho) -> Self {
        Self {
            version: MODEL_VERSION,
            weights: clf.model.weights.clone(),
            bias: clf.model.bias,
            feature_names: clf.model.feature_mask.iter().map(|&i| columns[i].clone()).collect(),
            feature_mask: clf.model.feature_mask.clone(),
            source_dim: clf.model.source_dim,
            scaler: clf.scaler.clone(),
            config,
        }
    }

    pub fn classifier(&self) -> AppResult<ParagraphClassifier> {
        if self.weights.len() != self.feature_mask.len()
            || self.scaler.means.len() != self.source_dim
            || self.scaler.stds.len() != self.source_dim
            || self.feature_mask.iter().any(|&i| i >= self.source_dim)
        {
            return Err(AppError::data("model file is internally inconsistent"));
        }
        Ok(ParagraphClassifier {
            scaler: self.scaler.clone(),
            model: LinearModel {
                weights: self.weights.clone(),
                bias: self.bias,
                feature_mask: self.feature_mask.clone(),
                source_dim: self.source_dim,
            },
        })
    }

    pub fn read(path: &Path) -> AppResult<Self> {
        let m: Self = jsonl::read_json(path)?;
        if m.version != MODEL_VERSION {
            return Err(AppError::data(format!(
                "{}: unsupported model version {}",
                path.display(),
                m.version
            )));
        }
        m.classifier().map_err(|e| e.in_file(path))?;
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> AppResult<()> {
        write_atomic(path, &jsonl::encode_json(self)?)
    }
}
