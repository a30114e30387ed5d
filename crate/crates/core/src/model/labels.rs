use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{data_err, Result};

/// Binary satisfaction label; `Satisfied` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Satisfaction {
    Satisfied,
    Unsatisfied,
}

impl Satisfaction {
    pub fn from_bool(satisfied: bool) -> Self {
        if satisfied {
            Self::Satisfied
        } else {
            Self::Unsatisfied
        }
    }

    pub fn is_satisfied(self) -> bool {
        self == Self::Satisfied
    }

    /// `+1` for satisfied, `-1` otherwise.
    pub fn sign(self) -> f64 {
        if self.is_satisfied() {
            1.0
        } else {
            -1.0
        }
    }
}

/// Three-way paragraph annotation collected from readers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Annotation {
    Useful,
    Useless,
    HardToSay,
}

impl Annotation {
    /// `hard_to_say` carries no training signal and maps to `None`.
    pub fn label(self) -> Option<Satisfaction> {
        match self {
            Self::Useful => Some(Satisfaction::Satisfied),
            Self::Useless => Some(Satisfaction::Unsatisfied),
            Self::HardToSay => None,
        }
    }
}

/// Where a training example came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Origin {
    pub user: String,
    pub task: String,
    pub judgment: String,
    pub paragraph: String,
}

impl Origin {
    pub fn new(
        user: impl Into<String>,
        task: impl Into<String>,
        judgment: impl Into<String>,
        paragraph: impl Into<String>,
    ) -> Self {
        Self {
            user: user.into(),
            task: task.into(),
            judgment: judgment.into(),
            paragraph: paragraph.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: Satisfaction,
    pub origin: Origin,
}

/// Examples with a uniform feature length.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    examples: Vec<LabeledExample>,
    dim: usize,
}

impl Dataset {
    pub fn new(examples: Vec<LabeledExample>) -> Result<Self> {
        let dim = examples.first().map_or(0, |e| e.features.len());
        if let Some((i, e)) = examples
            .iter()
            .enumerate()
            .find(|(_, e)| e.features.len() != dim)
        {
            return Err(data_err!(
                "example #{i} ({:?}) has {} features, expected {dim}",
                e.origin,
                e.features.len()
            ));
        }
        Ok(Self { examples, dim })
    }

    /// Builds a dataset from annotated feature vectors, dropping
    /// `hard_to_say` entries.
    pub fn from_annotated<I>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Origin, Vec<f64>, Annotation)>,
    {
        let examples = items
            .into_iter()
            .filter_map(|(origin, features, annotation)| {
                annotation.label().map(|label| LabeledExample {
                    features,
                    label,
                    origin,
                })
            })
            .collect();
        Self::new(examples)
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn into_examples(self) -> Vec<LabeledExample> {
        self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> impl Iterator<Item = Satisfaction> + '_ {
        self.examples.iter().map(|e| e.label)
    }

    pub fn count(&self, label: Satisfaction) -> usize {
        self.labels().filter(|&l| l == label).count()
    }

    /// Keeps only the listed feature columns, in the given order.
    pub fn project(&self, columns: &[usize]) -> Dataset {
        let examples = self
            .examples
            .iter()
            .map(|e| LabeledExample {
                features: columns.iter().map(|&c| e.features[c]).collect(),
                label: e.label,
                origin: e.origin.clone(),
            })
            .collect();
        Dataset {
            examples,
            dim: columns.len(),
        }
    }
}
