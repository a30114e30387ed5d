//! Recursive feature elimination driven by linear SVM weights.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::labels::Dataset;
use super::svm::{check_two_classes, fit_with_gram, gram, ClassWeighting, LinearModel, SvmConfig};
use crate::error::{config_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfeConfig {
    pub c: f64,
    /// Share of the surviving features dropped per round, rounded up.
    pub elimination_fraction: f64,
    pub target_dims: usize,
    pub max_rounds: usize,
    /// Recorded for reproducibility; SMO itself is deterministic.
    pub seed: u64,
    pub class_weighting: ClassWeighting,
    pub tolerance: f64,
}

impl Default for RfeConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            elimination_fraction: 0.10,
            target_dims: 512,
            max_rounds: 10_000,
            seed: 0,
            class_weighting: ClassWeighting::Balanced,
            tolerance: 1e-4,
        }
    }
}

impl RfeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.elimination_fraction > 0.0 && self.elimination_fraction < 1.0) {
            return Err(config_err!("elimination fraction must lie in (0, 1)"));
        }
        if self.target_dims == 0 {
            return Err(config_err!("target dimension must be at least 1"));
        }
        if !(self.c > 0.0) {
            return Err(config_err!("C must be positive"));
        }
        Ok(())
    }

    pub fn svm(&self) -> SvmConfig {
        SvmConfig {
            c: self.c,
            class_weighting: self.class_weighting,
            tolerance: self.tolerance,
            ..SvmConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeResult {
    /// SVM refitted on the surviving features.
    pub model: LinearModel,
    /// Eliminated source columns, first eliminated first.
    pub elimination_order: Vec<usize>,
    /// Surviving feature count after each round, starting with the input size.
    pub round_sizes: Vec<usize>,
    pub warning: Option<String>,
}

impl RfeResult {
    pub fn surviving(&self) -> &[usize] {
        &self.model.feature_mask
    }
}

/// Repeatedly fits an SVM and drops the `ceil(fraction * current)` features
/// with the smallest `|w|` (lower index first on ties) until at most
/// `target_dims` remain. The last round never drops below the target.
pub fn rfe(data: &Dataset, cfg: &RfeConfig) -> Result<RfeResult> {
    cfg.validate()?;
    check_two_classes(data)?;
    let svm = cfg.svm();
    let dim = data.dim();
    let mut mask: Vec<usize> = (0..dim).collect();
    let rows: Vec<&[f64]> = data.examples().iter().map(|e| e.features.as_slice()).collect();
    let n = rows.len();
    let mut k = gram(&rows);
    let mut elimination_order = Vec::new();
    let mut round_sizes = alloc::vec![dim];
    let mut warning = None;

    if cfg.target_dims >= dim {
        warning = Some(alloc::format!(
            "target of {} features is not below the {dim} available; no elimination performed",
            cfg.target_dims
        ));
    }

    let mut rounds = 0;
    while mask.len() > cfg.target_dims {
        if rounds == cfg.max_rounds {
            warning = Some(alloc::format!(
                "stopped after {rounds} rounds with {} features left",
                mask.len()
            ));
            break;
        }
        rounds += 1;
        let model = fit_with_gram(data, &mask, &k, &svm);
        let current = mask.len();
        let drop = (libm::ceil(cfg.elimination_fraction * current as f64) as usize)
            .max(1)
            .min(current - cfg.target_dims);
        let mut order: Vec<usize> = (0..current).collect();
        order.sort_by(|&a, &b| {
            model.weights[a]
                .abs()
                .total_cmp(&model.weights[b].abs())
                .then(mask[a].cmp(&mask[b]))
        });
        let mut removed: Vec<usize> = order[..drop].to_vec();
        // Downdate the Gram matrix by the removed columns' contributions.
        for &pos in &removed {
            let col = mask[pos];
            for i in 0..n {
                let xi = rows[i][col];
                if xi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    k[i * n + j] -= xi * rows[j][col];
                }
            }
            elimination_order.push(col);
        }
        removed.sort_unstable();
        let mut keep = Vec::with_capacity(current - drop);
        let mut r = removed.iter().peekable();
        for (pos, &col) in mask.iter().enumerate() {
            if r.peek() == Some(&&pos) {
                r.next();
            } else {
                keep.push(col);
            }
        }
        mask = keep;
        round_sizes.push(mask.len());
    }

    let model = super::svm::train_linear_svm_masked(data, &mask, &svm)?;
    Ok(RfeResult {
        model,
        elimination_order,
        round_sizes,
        warning,
    })
}
