use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::model::{Dataset, LabeledExample, Origin, Satisfaction};

/// Gaussian classification data where only a few columns carry signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SparseSpec {
    pub examples: usize,
    pub dims: usize,
    pub informative: usize,
    /// Distance between class means along each informative column, in
    /// units of the unit noise standard deviation.
    pub separation: f64,
}

impl Default for SparseSpec {
    fn default() -> Self {
        Self {
            examples: 400,
            dims: 2000,
            informative: 20,
            separation: 1.0,
        }
    }
}

/// Draws a dataset and the sorted list of informative columns. Labels
/// alternate so both classes are equally represented.
pub fn sparse_dataset(spec: &SparseSpec, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    if spec.informative > spec.dims || spec.examples < 2 || spec.dims == 0 {
        return Err(config_err!(
            "sparse dataset needs informative <= dims, dims >= 1 and at least two examples"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<usize> = (0..spec.dims).collect();
    cols.shuffle(&mut rng);
    let mut informative = cols[..spec.informative].to_vec();
    informative.sort_unstable();
    let mut is_inf = alloc::vec![false; spec.dims];
    for &c in &informative {
        is_inf[c] = true;
    }
    let half = spec.separation / 2.0;
    let examples = (0..spec.examples)
        .map(|i| {
            let label = Satisfaction::from_bool(i % 2 == 0);
            let shift = label.sign() * half;
            let features = (0..spec.dims)
                .map(|c| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if is_inf[c] {
                        z + shift
                    } else {
                        z
                    }
                })
                .collect();
            LabeledExample {
                features,
                label,
                origin: Origin::new("synthetic", "sparse", "0", format!("{i}")),
            }
        })
        .collect();
    Ok((Dataset::new(examples)?, informative))
}
