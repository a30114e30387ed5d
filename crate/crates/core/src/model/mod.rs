//! Paragraph satisfaction models and judgment-level voting.

pub mod baselines;
mod labels;
mod rfe;
mod scaler;
mod split;
mod svm;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use baselines::{train_baselines, BaselineConfig, Baselines, Classifier};
pub use labels::{Annotation, Dataset, LabeledExample, Origin, Satisfaction};
pub use rfe::{rfe, RfeConfig, RfeResult};
pub use scaler::{standardize, Scaler};
pub use split::{split_by_task, TaskSplit};
pub use svm::{train_linear_svm, train_linear_svm_masked, ClassWeighting, LinearModel, SvmConfig};

use crate::error::{config_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VotingConfig {
    /// Minimum number of satisfied paragraphs for a satisfied judgment.
    pub threshold: u32,
}

impl Default for VotingConfig {
    fn default() -> Self {
        Self { threshold: 3 }
    }
}

impl VotingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold == 0 {
            return Err(config_err!("voting threshold must be at least 1"));
        }
        Ok(())
    }
}

/// Satisfied iff at least `threshold` paragraphs are satisfied.
pub fn judge_satisfaction(labels: &[Satisfaction], cfg: &VotingConfig) -> Satisfaction {
    let sat = labels.iter().filter(|l| l.is_satisfied()).count();
    Satisfaction::from_bool(sat >= cfg.threshold as usize)
}

pub fn predict_paragraph(model: &LinearModel, features: &[f64]) -> Result<Satisfaction> {
    model.predict(features)
}

/// A trained model bundled with the scaler fitted on its training split, so
/// it can be applied to raw feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphClassifier {
    pub scaler: Scaler,
    pub model: LinearModel,
}

impl ParagraphClassifier {
    pub fn decision(&self, raw: &[f64]) -> Result<f64> {
        self.model.decision(&self.scaler.transform(raw)?)
    }

    pub fn predict(&self, raw: &[f64]) -> Result<Satisfaction> {
        self.model.predict(&self.scaler.transform(raw)?)
    }

    pub fn predict_all<'a, I>(&self, rows: I) -> Result<Vec<Satisfaction>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        rows.into_iter().map(|r| self.predict(r)).collect()
    }
}

/// Standardizes the training data, runs RFE and bundles the result.
pub fn train_classifier(train: &Dataset, cfg: &RfeConfig) -> Result<(ParagraphClassifier, RfeResult)> {
    let (scaled, scaler) = standardize(train)?;
    let result = rfe(&scaled, cfg)?;
    Ok((
        ParagraphClassifier {
            scaler,
            model: result.model.clone(),
        },
        result,
    ))
}
