//! Comparison models sharing the SVM's dataset interface: least-squares
//! linear regression, a CART decision tree with depth search, and a
//! one-hidden-layer perceptron.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::labels::{Dataset, Satisfaction};
use super::svm::{check_two_classes, LinearModel};
use crate::error::{config_err, training_err, Result};

/// Anything that labels a feature vector.
pub trait Classifier {
    fn classify(&self, features: &[f64]) -> Satisfaction;

    fn accuracy(&self, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let correct = data
            .examples()
            .iter()
            .filter(|e| self.classify(&e.features) == e.label)
            .count();
        correct as f64 / data.len() as f64
    }
}

impl Classifier for LinearModel {
    fn classify(&self, features: &[f64]) -> Satisfaction {
        self.predict(features).unwrap_or(Satisfaction::Unsatisfied)
    }
}

/// Ridge-stabilized least squares on `+1/-1` targets, solved in the dual so
/// it stays cheap when features outnumber examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearRegression {
    /// `ridge` is relative to the mean squared row norm of the centered data.
    pub fn fit(data: &Dataset, ridge: f64) -> Result<Self> {
        check_two_classes(data)?;
        let n = data.len();
        let dim = data.dim();
        let y: Vec<f64> = data.labels().map(Satisfaction::sign).collect();
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let mut x_mean = vec![0.0; dim];
        for e in data.examples() {
            for (m, v) in x_mean.iter_mut().zip(&e.features) {
                *m += v / n as f64;
            }
        }
        let centered: Vec<Vec<f64>> = data
            .examples()
            .iter()
            .map(|e| e.features.iter().zip(&x_mean).map(|(v, m)| v - m).collect())
            .collect();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let trace: f64 = (0..n).map(|i| k[i * n + i]).sum();
        let lambda = ridge * (trace / n as f64).max(1e-12);
        for i in 0..n {
            k[i * n + i] += lambda;
        }
        let rhs: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        let alpha = cholesky_solve(&mut k, n, &rhs)
            .ok_or_else(|| training_err!("least-squares system is not positive definite"))?;
        let mut weights = vec![0.0; dim];
        for (a, row) in alpha.iter().zip(&centered) {
            for (w, v) in weights.iter_mut().zip(row) {
                *w += a * v;
            }
        }
        let bias = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
        Ok(Self { weights, bias })
    }
}

impl Classifier for LinearRegression {
    fn classify(&self, features: &[f64]) -> Satisfaction {
        let s: f64 = self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + self.bias;
        Satisfaction::from_bool(s > 0.0)
    }
}

/// In-place Cholesky factorization and solve of an `n x n` SPD system.
fn cholesky_solve(a: &mut [f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 {
            return None;
        }
        let d = libm::sqrt(d);
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= a[i * n + k] * z[k];
        }
        z[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= a[k * n + i] * z[k];
        }
        z[i] /= a[i * n + i];
    }
    Some(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(Satisfaction),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary CART tree with Gini impurity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    pub max_depth: usize,
}

fn majority(labels: &[Satisfaction], idx: &[usize]) -> Satisfaction {
    let sat = idx.iter().filter(|&&i| labels[i].is_satisfied()).count();
    Satisfaction::from_bool(2 * sat > idx.len())
}

impl DecisionTree {
    pub fn fit(data: &Dataset, max_depth: usize) -> Result<Self> {
        check_two_classes(data)?;
        let labels: Vec<Satisfaction> = data.labels().collect();
        let rows: Vec<&[f64]> = data.examples().iter().map(|e| e.features.as_slice()).collect();
        let mut tree = Self {
            nodes: Vec::new(),
            max_depth,
        };
        let idx: Vec<usize> = (0..data.len()).collect();
        tree.grow(&rows, &labels, idx, 0);
        Ok(tree)
    }

    fn grow(&mut self, rows: &[&[f64]], labels: &[Satisfaction], idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(majority(labels, &idx)));
        let sat = idx.iter().filter(|&&i| labels[i].is_satisfied()).count();
        if depth >= self.max_depth || sat == 0 || sat == idx.len() {
            return id;
        }
        let Some((feature, threshold)) = best_split(rows, labels, &idx) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][feature] <= threshold);
        let left = self.grow(rows, labels, l, depth + 1);
        let right = self.grow(rows, labels, r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

/// Lowest weighted Gini over all features and midpoints; earlier features
/// and thresholds win ties.
fn best_split(rows: &[&[f64]], labels: &[Satisfaction], idx: &[usize]) -> Option<(usize, f64)> {
    let total = idx.len();
    let total_pos = idx.iter().filter(|&&i| labels[i].is_satisfied()).count();
    let parent = gini(total_pos, total) * total as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.to_vec();
    let dim = rows[idx[0]].len();
    for f in 0..dim {
        order.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
        let mut left_pos = 0;
        for s in 1..total {
            if labels[order[s - 1]].is_satisfied() {
                left_pos += 1;
            }
            let (lo, hi) = (rows[order[s - 1]][f], rows[order[s]][f]);
            if lo == hi {
                continue;
            }
            let score = gini(left_pos, s) * s as f64
                + gini(total_pos - left_pos, total - s) * (total - s) as f64;
            if best.is_none_or(|(b, _, _)| score < b - 1e-12) {
                best = Some((score, f, lo + (hi - lo) / 2.0));
            }
        }
    }
    best.filter(|&(score, _, _)| score < parent - 1e-12)
        .map(|(_, f, t)| (f, t))
}

impl Classifier for DecisionTree {
    fn classify(&self, features: &[f64]) -> Satisfaction {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf(label) => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if features[feature] <= threshold { left } else { right },
            }
        }
    }
}

/// Depth with the highest validation accuracy; the smallest depth wins ties.
pub fn select_depth(scores: &[(usize, f64)]) -> Option<usize> {
    scores
        .iter()
        .fold(None::<(usize, f64)>, |best, &(d, acc)| match best {
            Some((bd, ba)) if ba > acc || (ba == acc && bd <= d) => Some((bd, ba)),
            _ => Some((d, acc)),
        })
        .map(|(d, _)| d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSearch {
    pub tree: DecisionTree,
    pub depth: usize,
    /// `(depth, validation accuracy)` for every candidate.
    pub scores: Vec<(usize, f64)>,
}

/// Seeded shuffle into fit and validation parts.
pub fn holdout_split(data: &Dataset, validation_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(config_err!("validation fraction must lie in (0, 1)"));
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((data.len() as f64 * validation_fraction) as usize).clamp(1, data.len().saturating_sub(1).max(1));
    let pick = |ids: &[usize]| {
        Dataset::new(ids.iter().map(|&i| data.examples()[i].clone()).collect())
    };
    Ok((pick(&idx[n_val..])?, pick(&idx[..n_val])?))
}

/// Fits one tree per depth on the fit part and keeps the best on validation.
pub fn search_tree_depth(
    data: &Dataset,
    depths: &[usize],
    validation_fraction: f64,
    seed: u64,
) -> Result<TreeSearch> {
    if depths.is_empty() {
        return Err(config_err!("no tree depths to search"));
    }
    let (fit, val) = holdout_split(data, validation_fraction, seed)?;
    let mut trees = Vec::new();
    let mut scores = Vec::new();
    for &d in depths {
        let tree = DecisionTree::fit(&fit, d)?;
        scores.push((d, tree.accuracy(&val)));
        trees.push(tree);
    }
    let depth = select_depth(&scores).expect("nonempty");
    let tree = trees.swap_remove(depths.iter().position(|&d| d == depth).expect("present"));
    Ok(TreeSearch {
        tree,
        depth,
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            epochs: 200,
            batch_size: 16,
            learning_rate: 0.01,
            momentum: 0.9,
            l2: 1e-4,
            seed: 0,
        }
    }
}

/// `tanh` hidden layer, logistic output, trained by mini-batch SGD with
/// momentum on cross-entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    inputs: usize,
}

impl Mlp {
    pub fn fit(data: &Dataset, cfg: &MlpConfig) -> Result<Self> {
        check_two_classes(data)?;
        if cfg.hidden == 0 || cfg.batch_size == 0 {
            return Err(config_err!("MLP needs hidden units and a positive batch size"));
        }
        let d = data.dim();
        let h = cfg.hidden;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let init = Normal::new(0.0, libm::sqrt(1.0 / d.max(1) as f64)).expect("finite std");
        let init2 = Normal::new(0.0, libm::sqrt(1.0 / h as f64)).expect("finite std");
        let mut net = Self {
            w1: (0..h * d).map(|_| init.sample(&mut rng)).collect(),
            b1: vec![0.0; h],
            w2: (0..h).map(|_| init2.sample(&mut rng)).collect(),
            b2: 0.0,
            inputs: d,
        };
        let mut v_w1 = vec![0.0; h * d];
        let mut v_b1 = vec![0.0; h];
        let mut v_w2 = vec![0.0; h];
        let mut v_b2 = 0.0;
        let targets: Vec<f64> = data.labels().map(|l| if l.is_satisfied() { 1.0 } else { 0.0 }).collect();
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut hidden = vec![0.0; h];
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch_size) {
                let mut g_w1 = vec![0.0; h * d];
                let mut g_b1 = vec![0.0; h];
                let mut g_w2 = vec![0.0; h];
                let mut g_b2 = 0.0;
                for &i in batch {
                    let x = &data.examples()[i].features;
                    let out = net.forward(x, &mut hidden);
                    let delta = out - targets[i];
                    g_b2 += delta;
                    for k in 0..h {
                        g_w2[k] += delta * hidden[k];
                        let dh = delta * net.w2[k] * (1.0 - hidden[k] * hidden[k]);
                        g_b1[k] += dh;
                        let row = &mut g_w1[k * d..(k + 1) * d];
                        for (g, xv) in row.iter_mut().zip(x) {
                            *g += dh * xv;
                        }
                    }
                }
                let scale = 1.0 / batch.len() as f64;
                let step = |v: &mut f64, p: &mut f64, g: f64, decay: bool| {
                    let g = g * scale + if decay { cfg.l2 * *p } else { 0.0 };
                    *v = cfg.momentum * *v - cfg.learning_rate * g;
                    *p += *v;
                };
                for ((v, p), g) in v_w1.iter_mut().zip(net.w1.iter_mut()).zip(&g_w1) {
                    step(v, p, *g, true);
                }
                for ((v, p), g) in v_b1.iter_mut().zip(net.b1.iter_mut()).zip(&g_b1) {
                    step(v, p, *g, false);
                }
                for ((v, p), g) in v_w2.iter_mut().zip(net.w2.iter_mut()).zip(&g_w2) {
                    step(v, p, *g, true);
                }
                step(&mut v_b2, &mut net.b2, g_b2, false);
            }
        }
        Ok(net)
    }

    fn forward(&self, x: &[f64], hidden: &mut [f64]) -> f64 {
        let d = self.inputs;
        for (k, hk) in hidden.iter_mut().enumerate() {
            let z: f64 = self.w1[k * d..(k + 1) * d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[k];
            *hk = libm::tanh(z);
        }
        let z: f64 = self.w2.iter().zip(hidden.iter()).map(|(w, v)| w * v).sum::<f64>() + self.b2;
        1.0 / (1.0 + libm::exp(-z))
    }

    pub fn probability(&self, features: &[f64]) -> f64 {
        let mut hidden = vec![0.0; self.b1.len()];
        self.forward(features, &mut hidden)
    }
}

impl Classifier for Mlp {
    fn classify(&self, features: &[f64]) -> Satisfaction {
        Satisfaction::from_bool(self.probability(features) > 0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub ridge: f64,
    pub tree_depths: Vec<usize>,
    pub validation_fraction: f64,
    pub mlp: MlpConfig,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            ridge: 1e-3,
            tree_depths: vec![4, 8, 16, 32],
            validation_fraction: 0.25,
            mlp: MlpConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub linear: LinearRegression,
    pub tree: TreeSearch,
    pub mlp: Mlp,
}

pub fn train_baselines(data: &Dataset, cfg: &BaselineConfig) -> Result<Baselines> {
    let linear = LinearRegression::fit(data, cfg.ridge)?;
    let tree = search_tree_depth(data, &cfg.tree_depths, cfg.validation_fraction, cfg.seed)?;
    let mlp = Mlp::fit(
        data,
        &MlpConfig {
            seed: cfg.mlp.seed ^ cfg.seed,
            ..cfg.mlp.clone()
        },
    )?;
    Ok(Baselines { linear, tree, mlp })
}

/// Random guessing reference with a fixed seed.
pub fn random_accuracy(data: &Dataset, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if data.is_empty() {
        return 0.0;
    }
    let hits = data
        .labels()
        .filter(|&l| Satisfaction::from_bool(rng.random_bool(0.5)) == l)
        .count();
    hits as f64 / data.len() as f64
}
