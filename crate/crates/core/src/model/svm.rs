//! Soft-margin linear SVM trained on the dual with SMO.
//!
//! Working-pair selection follows the second-order rule of Fan, Chen and
//! Lin (the one LIBSVM uses), on a precomputed linear Gram matrix. The bias
//! is left unregularized, so rescaling inputs by `a` and `C` by `1 / a^2`
//! gives the same classifier. No randomness is involved: identical data and
//! configuration always produce identical weights.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::labels::{Dataset, Satisfaction};
use crate::error::{data_err, training_err, Result};

const TAU: f64 = 1e-12;

/// Per-class scaling of the penalty `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    /// Every example gets `C`.
    Uniform,
    /// Example of class `k` gets `C * n / (2 * n_k)`.
    #[default]
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub class_weighting: ClassWeighting,
    /// Stop when the maximal KKT violation drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            class_weighting: ClassWeighting::Balanced,
            tolerance: 1e-4,
            max_iterations: 10_000_000,
        }
    }
}

/// Linear decision function over a subset of the source features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Source column of each weight.
    pub feature_mask: Vec<usize>,
    /// Length of the feature vectors this model accepts.
    pub source_dim: usize,
}

impl LinearModel {
    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.source_dim {
            return Err(data_err!(
                "feature vector has {len} entries, model expects {}",
                self.source_dim
            ));
        }
        Ok(())
    }

    /// `w . x[mask] + b`.
    pub fn decision(&self, features: &[f64]) -> Result<f64> {
        self.check_len(features.len())?;
        Ok(self
            .weights
            .iter()
            .zip(&self.feature_mask)
            .map(|(w, &i)| w * features[i])
            .sum::<f64>()
            + self.bias)
    }

    /// Positive margin means satisfied; exactly zero counts as unsatisfied.
    pub fn predict(&self, features: &[f64]) -> Result<Satisfaction> {
        Ok(Satisfaction::from_bool(self.decision(features)? > 0.0))
    }
}

/// Symmetric Gram matrix `K[i][j] = x_i . x_j`, row-major.
pub(crate) fn gram(rows: &[&[f64]]) -> Vec<f64> {
    let n = rows.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = rows[i].iter().zip(rows[j]).map(|(a, b)| a * b).sum();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Dual solution: multipliers and the offset `rho` (decision is `w.x - rho`).
#[derive(Debug, Clone)]
pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
}

pub(crate) fn upper_bounds(labels: &[f64], cfg: &SvmConfig) -> Vec<f64> {
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    let neg = n - pos;
    labels
        .iter()
        .map(|&y| match cfg.class_weighting {
            ClassWeighting::Uniform => cfg.c,
            ClassWeighting::Balanced => {
                let count = if y > 0.0 { pos } else { neg };
                cfg.c * n / (2.0 * count)
            }
        })
        .collect()
}

/// SMO on `min 1/2 a'Qa - e'a, 0 <= a_i <= C_i, y'a = 0`.
pub(crate) fn solve_dual(k: &[f64], y: &[f64], bounds: &[f64], cfg: &SvmConfig) -> DualSolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let at_upper = |a: f64, c: f64| a >= c;
    let at_lower = |a: f64| a <= 0.0;
    let max_iter = cfg.max_iterations;
    let mut iterations = 0;

    while iterations < max_iter {
        // i: maximal violator in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            let up = if y[t] > 0.0 {
                !at_upper(alpha[t], bounds[t])
            } else {
                !at_lower(alpha[t])
            };
            if up {
                let v = -y[t] * grad[t];
                if v >= gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        // j: second-order choice in I_low.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_obj = f64::INFINITY;
        if i_sel != usize::MAX {
            let ki = &k[i_sel * n..(i_sel + 1) * n];
            for t in 0..n {
                let low = if y[t] > 0.0 {
                    !at_lower(alpha[t])
                } else {
                    !at_upper(alpha[t], bounds[t])
                };
                if !low {
                    continue;
                }
                let v = y[t] * grad[t];
                if v >= gmax2 {
                    gmax2 = v;
                }
                let diff = gmax + v;
                if diff > 0.0 {
                    let a = ki[i_sel] + k[t * n + t] - 2.0 * ki[t];
                    let a = if a > 0.0 { a } else { TAU };
                    let obj = -(diff * diff) / a;
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = t;
                    }
                }
            }
        }
        if gmax + gmax2 < cfg.tolerance || j_sel == usize::MAX {
            break;
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (ci, cj) = (bounds[i], bounds[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let a = {
            let v = k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j];
            if v > 0.0 {
                v
            } else {
                TAU
            }
        };
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / a;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / a;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k[t * n + i] * di + y[j] * k[t * n + j] * dj);
        }
    }

    // Offset from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if at_upper(alpha[t], bounds[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    };
    DualSolution { alpha, rho }
}

pub(crate) fn check_two_classes(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(training_err!("cannot train on an empty dataset"));
    }
    if data.count(Satisfaction::Satisfied) == 0 || data.count(Satisfaction::Unsatisfied) == 0 {
        return Err(training_err!(
            "training data needs both satisfied and unsatisfied examples"
        ));
    }
    Ok(())
}

/// Fits on the columns listed in `mask`, with a precomputed Gram matrix of
/// those columns.
pub(crate) fn fit_with_gram(
    data: &Dataset,
    mask: &[usize],
    k: &[f64],
    cfg: &SvmConfig,
) -> LinearModel {
    let y: Vec<f64> = data.labels().map(Satisfaction::sign).collect();
    let bounds = upper_bounds(&y, cfg);
    let sol = solve_dual(k, &y, &bounds, cfg);
    let mut weights = vec![0.0; mask.len()];
    for (e, (&a, &yi)) in data.examples().iter().zip(sol.alpha.iter().zip(&y)) {
        if a == 0.0 {
            continue;
        }
        for (w, &col) in weights.iter_mut().zip(mask) {
            *w += a * yi * e.features[col];
        }
    }
    LinearModel {
        weights,
        bias: -sol.rho,
        feature_mask: mask.to_vec(),
        source_dim: data.dim(),
    }
}

/// Fits on a subset of columns.
pub fn train_linear_svm_masked(data: &Dataset, mask: &[usize], cfg: &SvmConfig) -> Result<LinearModel> {
    check_two_classes(data)?;
    if let Some(&bad) = mask.iter().find(|&&c| c >= data.dim()) {
        return Err(data_err!("feature index {bad} out of range for {} features", data.dim()));
    }
    let rows: Vec<Vec<f64>> = data
        .examples()
        .iter()
        .map(|e| mask.iter().map(|&c| e.features[c]).collect())
        .collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let k = gram(&refs);
    Ok(fit_with_gram(data, mask, &k, cfg))
}

/// Fits a linear SVM on every feature.
pub fn train_linear_svm(data: &Dataset, cfg: &SvmConfig) -> Result<LinearModel> {
    let mask: Vec<usize> = (0..data.dim()).collect();
    train_linear_svm_masked(data, &mask, cfg)
}
