use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::labels::{Dataset, LabeledExample};
use crate::error::{data_err, Result};

/// Per-feature z-scoring fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    /// Population standard deviations; zero marks a constant feature.
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.len() < 2 {
            return Err(data_err!(
                "standardization needs at least two examples, got {}",
                data.len()
            ));
        }
        let n = data.len() as f64;
        let dim = data.dim();
        let mut means = alloc::vec![0.0; dim];
        for e in data.examples() {
            for (m, v) in means.iter_mut().zip(&e.features) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = alloc::vec![0.0; dim];
        for e in data.examples() {
            for ((s, v), m) in vars.iter_mut().zip(&e.features).zip(&means) {
                let d = v - m;
                *s += d * d;
            }
        }
        let stds = vars
            .iter()
            .zip(&means)
            .map(|(&s, &m)| {
                let sd = libm::sqrt(s / n);
                // Identical values can leave a rounding-level spread.
                if sd <= 1e-12 * m.abs() {
                    0.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.dim() {
            return Err(data_err!(
                "feature vector has {} entries, scaler expects {}",
                features.len(),
                self.dim()
            ));
        }
        Ok(features
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| if *s == 0.0 { 0.0 } else { (v - m) / s })
            .collect())
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        let examples = data
            .examples()
            .iter()
            .map(|e| {
                Ok(LabeledExample {
                    features: self.transform(&e.features)?,
                    label: e.label,
                    origin: e.origin.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(examples)
    }
}

/// Fits a [`Scaler`] on `data` and returns the transformed copy with it.
pub fn standardize(data: &Dataset) -> Result<(Dataset, Scaler)> {
    let scaler = Scaler::fit(data)?;
    Ok((scaler.apply(data)?, scaler))
}
