//! Intent-weighted ranking of candidate judgments with feedback-driven
//! intent down-weighting.

#[cfg(test)]
mod tests;

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, data_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intent {
    pub id: String,
    pub weight: f64,
}

/// Ordered intent weights `I_i`, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntentProfile {
    pub intents: Vec<Intent>,
}

impl IntentProfile {
    pub fn new(intents: Vec<Intent>) -> Result<Self> {
        let p = Self { intents };
        p.validate()?;
        Ok(p)
    }

    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        Self::new(
            weights
                .iter()
                .enumerate()
                .map(|(i, &weight)| Intent {
                    id: alloc::format!("{i}"),
                    weight,
                })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.intents.is_empty() {
            return Err(data_err!("intent profile needs at least one intent"));
        }
        if let Some(i) = self.intents.iter().find(|i| !(0.0..=1.0).contains(&i.weight)) {
            return Err(data_err!("intent {} has weight {} outside [0, 1]", i.id, i.weight));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.intents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intents.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.intents.iter().map(|i| i.weight).collect()
    }

    /// Multiplies every weight by `c`; used to check ordering invariance.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            intents: self
                .intents
                .iter()
                .map(|i| Intent {
                    id: i.id.clone(),
                    weight: i.weight * c,
                })
                .collect(),
        }
    }
}

/// One judgment's per-intent relevance `D_{j,*}` and overall grade `r_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRelevance {
    pub id: String,
    pub relevance: Vec<f64>,
    pub overall: u8,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelevanceMatrix {
    pub judgments: Vec<JudgmentRelevance>,
}

impl RelevanceMatrix {
    pub fn new(judgments: Vec<JudgmentRelevance>) -> Self {
        Self { judgments }
    }

    pub fn validate(&self, intents: usize) -> Result<()> {
        for (i, j) in self.judgments.iter().enumerate() {
            if self.judgments[..i].iter().any(|o| o.id == j.id) {
                return Err(data_err!("judgment {} is listed twice", j.id));
            }
            if j.relevance.len() != intents {
                return Err(data_err!(
                    "judgment {} has {} relevance entries for {intents} intents",
                    j.id,
                    j.relevance.len()
                ));
            }
            if j.relevance.iter().any(|d| !(0.0..=1.0).contains(d)) {
                return Err(data_err!("judgment {} has relevance outside [0, 1]", j.id));
            }
            if !(1..=4).contains(&j.overall) {
                return Err(data_err!("judgment {} has overall relevance {} outside 1..4", j.id, j.overall));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&JudgmentRelevance> {
        self.judgments
            .iter()
            .find(|j| j.id == id)
            .ok_or_else(|| data_err!("unknown judgment {id}"))
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}

/// Per-task label file: initial intents and judgment relevance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskLabels {
    pub task: String,
    pub intents: IntentProfile,
    pub judgments: RelevanceMatrix,
    /// Fixed candidate pool; chosen with [`select_candidate_pool`] when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<Vec<String>>,
}

impl TaskLabels {
    pub fn validate(&self) -> Result<()> {
        self.intents.validate()?;
        self.judgments.validate(self.intents.len())?;
        if let Some(pool) = &self.pool {
            for (i, id) in pool.iter().enumerate() {
                self.judgments.get(id)?;
                if pool[..i].contains(id) {
                    return Err(data_err!("judgment {id} appears twice in the pool of task {}", self.task));
                }
            }
        }
        Ok(())
    }

    pub fn candidate_pool(&self, pool_size: usize) -> Result<Vec<String>> {
        match &self.pool {
            Some(p) => Ok(p.clone()),
            None => select_candidate_pool(&self.judgments, self.intents.len(), pool_size),
        }
    }
}

/// Orders ids numerically when both parse as integers, else as strings.
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

/// `sum_i I_i * D_{j,i}`.
pub fn ranking_score(profile: &IntentProfile, d_row: &[f64]) -> Result<f64> {
    if profile.len() != d_row.len() {
        return Err(data_err!(
            "profile has {} intents but relevance row has {} entries",
            profile.len(),
            d_row.len()
        ));
    }
    Ok(profile.intents.iter().zip(d_row).map(|(i, d)| i.weight * d).sum())
}

/// Higher `r` first, then lower id.
fn by_overall(a: &JudgmentRelevance, b: &JudgmentRelevance) -> Ordering {
    b.overall.cmp(&a.overall).then_with(|| compare_ids(&a.id, &b.id))
}

/// Whose feedback the unsatisfied signal blames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlameMode {
    /// Intents ranked by `I_i * D_{j,i}` for the judgment at hand.
    #[default]
    Product,
    /// Intents ranked by `I_i` alone.
    ProfileOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RerankConfig {
    /// Number of intents halved per unsatisfied judgment.
    pub top_t: usize,
    pub blame: BlameMode,
    pub pool_size: usize,
}

impl Default for RerankConfig {
    fn default() -> Self {
        Self {
            top_t: 1,
            blame: BlameMode::Product,
            pool_size: 7,
        }
    }
}

impl RerankConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_t == 0 {
            return Err(config_err!("top_t must be at least 1"));
        }
        if self.pool_size == 0 {
            return Err(config_err!("pool size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub judgment: String,
    pub satisfied: bool,
    /// Indices of the intents that were halved.
    pub halved: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingState {
    pub profile: IntentProfile,
    pub shown: Vec<String>,
    pub remaining: Vec<String>,
    pub history: Vec<FeedbackEvent>,
}

impl RankingState {
    pub fn new(profile: IntentProfile, pool: &[String]) -> Result<Self> {
        profile.validate()?;
        for (i, id) in pool.iter().enumerate() {
            if pool[..i].contains(id) {
                return Err(data_err!("judgment {id} appears twice in the candidate pool"));
            }
        }
        Ok(Self {
            profile,
            shown: Vec::new(),
            remaining: pool.to_vec(),
            history: Vec::new(),
        })
    }

    /// Moves `id` from remaining to shown.
    pub fn show(&mut self, id: &str) -> Result<()> {
        let pos = self
            .remaining
            .iter()
            .position(|r| r == id)
            .ok_or_else(|| data_err!("judgment {id} is not among the remaining candidates"))?;
        let id = self.remaining.remove(pos);
        self.shown.push(id);
        Ok(())
    }
}

/// Remaining judgments by score, then `r`, then id.
pub fn rank_remaining(state: &RankingState, matrix: &RelevanceMatrix) -> Result<Vec<String>> {
    let mut scored = state
        .remaining
        .iter()
        .map(|id| {
            let j = matrix.get(id)?;
            Ok((ranking_score(&state.profile, &j.relevance)?, j))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|(sa, a), (sb, b)| sb.total_cmp(sa).then_with(|| by_overall(a, b)));
    Ok(scored.into_iter().map(|(_, j)| j.id.clone()).collect())
}

/// Shows and returns the best remaining judgment, if any.
pub fn show_next(state: &mut RankingState, matrix: &RelevanceMatrix) -> Result<Option<String>> {
    let Some(next) = rank_remaining(state, matrix)?.into_iter().next() else {
        return Ok(None);
    };
    state.show(&next)?;
    Ok(Some(next))
}

/// Fixed order by overall relevance, highest first.
pub fn relevance_order(pool: &[String], matrix: &RelevanceMatrix) -> Result<Vec<String>> {
    let mut js = pool.iter().map(|id| matrix.get(id)).collect::<Result<Vec<_>>>()?;
    js.sort_by(|a, b| by_overall(a, b));
    Ok(js.into_iter().map(|j| j.id.clone()).collect())
}

/// Indices of the `t` intents with the highest blame weight; lower index
/// wins ties.
pub fn blamed_intents(profile: &IntentProfile, d_row: &[f64], t: usize, mode: BlameMode) -> Vec<usize> {
    let weight = |i: usize| match mode {
        BlameMode::Product => profile.intents[i].weight * d_row[i],
        BlameMode::ProfileOnly => profile.intents[i].weight,
    };
    let mut idx: Vec<usize> = (0..profile.len()).collect();
    idx.sort_by(|&a, &b| weight(b).total_cmp(&weight(a)).then(a.cmp(&b)));
    idx.truncate(t);
    idx
}

/// Satisfied feedback keeps the profile; unsatisfied feedback halves the
/// weights of the top-`t` blamed intents.
pub fn apply_feedback(
    mut state: RankingState,
    matrix: &RelevanceMatrix,
    judgment: &str,
    satisfied: bool,
    cfg: &RerankConfig,
) -> Result<RankingState> {
    if !state.shown.iter().any(|s| s == judgment) {
        return Err(data_err!("feedback for judgment {judgment}, which has not been shown"));
    }
    let row = &matrix.get(judgment)?.relevance;
    if row.len() != state.profile.len() {
        return Err(data_err!(
            "judgment {judgment} has {} relevance entries for {} intents",
            row.len(),
            state.profile.len()
        ));
    }
    let halved = if satisfied {
        Vec::new()
    } else {
        let blamed = blamed_intents(&state.profile, row, cfg.top_t, cfg.blame);
        for &i in &blamed {
            state.profile.intents[i].weight /= 2.0;
        }
        blamed
    };
    state.history.push(FeedbackEvent {
        judgment: judgment.into(),
        satisfied,
        halved,
    });
    Ok(state)
}

/// Per-intent argmax of `D` (ties: higher `r`, then lower id), then the
/// highest-`r` judgments until `pool_size` distinct entries are chosen.
pub fn select_candidate_pool(matrix: &RelevanceMatrix, intents: usize, pool_size: usize) -> Result<Vec<String>> {
    matrix.validate(intents)?;
    if matrix.len() < pool_size {
        return Err(data_err!(
            "corpus has {} judgments, fewer than the pool size {pool_size}",
            matrix.len()
        ));
    }
    let mut pool: Vec<String> = Vec::with_capacity(pool_size);
    for i in 0..intents {
        let best = matrix
            .judgments
            .iter()
            .min_by(|a, b| b.relevance[i].total_cmp(&a.relevance[i]).then_with(|| by_overall(a, b)))
            .expect("nonempty corpus");
        if !pool.contains(&best.id) {
            pool.push(best.id.clone());
        }
    }
    if pool.len() > pool_size {
        return Err(config_err!(
            "{} intents need distinct judgments but the pool holds only {pool_size}",
            pool.len()
        ));
    }
    let mut rest: Vec<&JudgmentRelevance> = matrix.judgments.iter().filter(|j| !pool.contains(&j.id)).collect();
    rest.sort_by(|a, b| by_overall(a, b));
    pool.extend(rest.into_iter().take(pool_size - pool.len()).map(|j| j.id.clone()));
    Ok(pool)
}

/// One displayed judgment in a ranking trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: usize,
    pub shown: String,
    pub feedback: Option<bool>,
    pub profile: Vec<f64>,
}
