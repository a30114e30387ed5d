//! Replay of logged retrieval sessions under different feedback strategies,
//! with judgment-level accuracy/F1 and per-arm satisfaction summaries.

mod metrics;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, data_err, Result};
use crate::model::{judge_satisfaction, Annotation, LinearModel, ParagraphClassifier, Satisfaction, VotingConfig};
use crate::rerank::{apply_feedback, rank_remaining, relevance_order, RankingState, RerankConfig, TaskLabels};
use crate::signal::{SegmentKey, ViewEvent};

pub use metrics::{compare_strategies, evaluate_feedback, ArmRow, FeedbackMetrics, MetricsReport, StrategyRow};

/// One logged interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    View {
        judgment: String,
        paragraph: String,
        start_s: f64,
        end_s: f64,
    },
    Click {
        judgment: String,
        paragraph: String,
        time_s: f64,
    },
    Annotate {
        judgment: String,
        paragraph: String,
        annotation: Annotation,
    },
    /// Gold judgment-level satisfaction.
    Judge { judgment: String, satisfied: bool },
    /// Task-level labels given after the session; `arm` names the ranking
    /// condition the participant saw.
    TaskLabel {
        ranking_quality: u8,
        satisfied: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arm: Option<String>,
    },
}

impl SessionEvent {
    fn time(&self) -> Option<f64> {
        match self {
            Self::View { start_s, .. } => Some(*start_s),
            Self::Click { time_s, .. } => Some(*time_s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub user: String,
    pub task: String,
    pub events: Vec<SessionEvent>,
}

impl SessionLog {
    pub fn new(user: impl Into<String>, task: impl Into<String>, events: Vec<SessionEvent>) -> Self {
        Self {
            user: user.into(),
            task: task.into(),
            events,
        }
    }

    /// Timed events must be non-decreasing, views must have `end >= start`,
    /// and every annotation must follow a view of the same paragraph.
    pub fn validate(&self) -> Result<()> {
        let mut last = f64::NEG_INFINITY;
        let mut viewed: Vec<(&str, &str)> = Vec::new();
        let mut judged: Vec<&str> = Vec::new();
        for (i, ev) in self.events.iter().enumerate() {
            if let Some(t) = ev.time() {
                if !(t.is_finite() && t >= last) {
                    return Err(data_err!(
                        "session {}/{}: event #{i} at {t} s is out of time order",
                        self.user,
                        self.task
                    ));
                }
                last = t;
            }
            match ev {
                SessionEvent::View {
                    judgment,
                    paragraph,
                    start_s,
                    end_s,
                } => {
                    if !(end_s.is_finite() && end_s >= start_s) {
                        return Err(data_err!(
                            "session {}/{}: view of {judgment}/{paragraph} ends before it starts",
                            self.user,
                            self.task
                        ));
                    }
                    viewed.push((judgment, paragraph));
                }
                SessionEvent::Annotate { judgment, paragraph, .. } => {
                    if !viewed.contains(&(judgment.as_str(), paragraph.as_str())) {
                        return Err(data_err!(
                            "session {}/{}: paragraph {judgment}/{paragraph} annotated before being viewed",
                            self.user,
                            self.task
                        ));
                    }
                }
                SessionEvent::Judge { judgment, .. } => {
                    if judged.contains(&judgment.as_str()) {
                        return Err(data_err!(
                            "session {}/{}: judgment {judgment} has two gold labels",
                            self.user,
                            self.task
                        ));
                    }
                    judged.push(judgment);
                }
                SessionEvent::TaskLabel { ranking_quality, .. } => {
                    if !(1..=4).contains(ranking_quality) {
                        return Err(data_err!(
                            "session {}/{}: ranking quality {ranking_quality} outside 1..4",
                            self.user,
                            self.task
                        ));
                    }
                }
                SessionEvent::Click { .. } => {}
            }
        }
        Ok(())
    }

    /// Distinct viewed judgments in first-view order.
    pub fn viewed_judgments(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for ev in &self.events {
            if let SessionEvent::View { judgment, .. } = ev {
                if !out.contains(&judgment.as_str()) {
                    out.push(judgment);
                }
            }
        }
        out
    }

    /// Distinct viewed paragraphs of one judgment in first-view order.
    pub fn viewed_paragraphs(&self, judgment: &str) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for ev in &self.events {
            if let SessionEvent::View { judgment: j, paragraph, .. } = ev {
                if j == judgment && !out.contains(&paragraph.as_str()) {
                    out.push(paragraph);
                }
            }
        }
        out
    }

    pub fn has_judgment(&self, judgment: &str) -> bool {
        self.events.iter().any(|ev| match ev {
            SessionEvent::View { judgment: j, .. }
            | SessionEvent::Click { judgment: j, .. }
            | SessionEvent::Annotate { judgment: j, .. }
            | SessionEvent::Judge { judgment: j, .. } => j == judgment,
            SessionEvent::TaskLabel { .. } => false,
        })
    }

    /// Number of distinct clicked paragraphs in one judgment.
    pub fn clicked_paragraphs(&self, judgment: &str) -> usize {
        let mut seen: Vec<&str> = Vec::new();
        for ev in &self.events {
            if let SessionEvent::Click { judgment: j, paragraph, .. } = ev {
                if j == judgment && !seen.contains(&paragraph.as_str()) {
                    seen.push(paragraph);
                }
            }
        }
        seen.len()
    }

    pub fn gold(&self, judgment: &str) -> Option<Satisfaction> {
        self.events.iter().find_map(|ev| match ev {
            SessionEvent::Judge { judgment: j, satisfied } if j == judgment => Some(Satisfaction::from_bool(*satisfied)),
            _ => None,
        })
    }

    pub fn annotation(&self, judgment: &str, paragraph: &str) -> Option<Annotation> {
        self.events.iter().rev().find_map(|ev| match ev {
            SessionEvent::Annotate {
                judgment: j,
                paragraph: p,
                annotation,
            } if j == judgment && p == paragraph => Some(*annotation),
            _ => None,
        })
    }

    /// `(ranking_quality, satisfied, arm)` from the task label, if logged.
    pub fn task_label(&self) -> Option<(u8, bool, Option<&str>)> {
        self.events.iter().rev().find_map(|ev| match ev {
            SessionEvent::TaskLabel {
                ranking_quality,
                satisfied,
                arm,
            } => Some((*ranking_quality, *satisfied, arm.as_deref())),
            _ => None,
        })
    }

    /// View events annotated with clicks and labels, for slicing a
    /// continuous recording into paragraph segments.
    pub fn view_events(&self) -> Vec<ViewEvent> {
        self.events
            .iter()
            .filter_map(|ev| match ev {
                SessionEvent::View {
                    judgment,
                    paragraph,
                    start_s,
                    end_s,
                } => Some(ViewEvent {
                    paragraph: paragraph.clone(),
                    judgment: Some(judgment.clone()),
                    start_s: *start_s,
                    end_s: *end_s,
                    clicked: Some(self.events.iter().any(|c| {
                        matches!(c, SessionEvent::Click { judgment: j, paragraph: p, .. } if j == judgment && p == paragraph)
                    })),
                    annotation: self.annotation(judgment, paragraph),
                }),
                _ => None,
            })
            .collect()
    }

    pub fn segment_key(&self, judgment: &str, paragraph: &str) -> SegmentKey {
        SegmentKey::new(self.user.as_str(), self.task.as_str(), judgment, paragraph)
    }
}

/// Satisfied iff at least `threshold` distinct paragraphs of the judgment
/// were clicked.
pub fn click_feedback(log: &SessionLog, judgment: &str, threshold: u32) -> Result<Satisfaction> {
    if !log.has_judgment(judgment) {
        return Err(data_err!(
            "judgment {judgment} does not occur in session {}/{}",
            log.user,
            log.task
        ));
    }
    Ok(Satisfaction::from_bool(log.clicked_paragraphs(judgment) >= threshold as usize))
}

/// Supplies the feature vector of one paragraph segment.
pub trait FeatureSource {
    fn features(&self, key: &SegmentKey) -> Result<Option<Vec<f64>>>;
}

impl FeatureSource for BTreeMap<SegmentKey, Vec<f64>> {
    fn features(&self, key: &SegmentKey) -> Result<Option<Vec<f64>>> {
        Ok(self.get(key).cloned())
    }
}

/// Labels a single paragraph from its features.
pub trait ParagraphPredictor {
    fn predict_paragraph(&self, features: &[f64]) -> Result<Satisfaction>;
}

impl ParagraphPredictor for LinearModel {
    fn predict_paragraph(&self, features: &[f64]) -> Result<Satisfaction> {
        self.predict(features)
    }
}

impl ParagraphPredictor for ParagraphClassifier {
    fn predict_paragraph(&self, features: &[f64]) -> Result<Satisfaction> {
        self.predict(features)
    }
}

/// Predicts each viewed paragraph of the judgment and votes.
pub fn eeg_feedback(
    log: &SessionLog,
    judgment: &str,
    source: &dyn FeatureSource,
    predictor: &dyn ParagraphPredictor,
    voting: &VotingConfig,
) -> Result<Satisfaction> {
    let paragraphs = log.viewed_paragraphs(judgment);
    if paragraphs.is_empty() && !log.has_judgment(judgment) {
        return Err(data_err!(
            "judgment {judgment} does not occur in session {}/{}",
            log.user,
            log.task
        ));
    }
    let mut labels = Vec::with_capacity(paragraphs.len());
    for p in paragraphs {
        let key = log.segment_key(judgment, p);
        let features = source.features(&key)?.ok_or_else(|| {
            data_err!(
                "no EEG segment for paragraph {p} of judgment {judgment} in session {}/{}",
                log.user,
                log.task
            )
        })?;
        labels.push(predictor.predict_paragraph(&features)?);
    }
    Ok(judge_satisfaction(&labels, voting))
}

/// Serializable strategy description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategySpec {
    None,
    Click { threshold: u32 },
    Eeg { threshold: u32 },
}

impl StrategySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Click { threshold: 0 } | Self::Eeg { threshold: 0 } => {
                Err(config_err!("strategy thresholds must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "None",
            Self::Click { .. } => "Click",
            Self::Eeg { .. } => "EEG",
        }
    }

    pub fn threshold(&self) -> Option<u32> {
        match self {
            Self::None => None,
            Self::Click { threshold } | Self::Eeg { threshold } => Some(*threshold),
        }
    }
}

/// A strategy ready to run: EEG strategies carry their model and features.
#[derive(Clone, Copy)]
pub enum Strategy<'a> {
    None,
    Click {
        threshold: u32,
    },
    Eeg {
        voting: VotingConfig,
        predictor: &'a dyn ParagraphPredictor,
        source: &'a dyn FeatureSource,
    },
}

impl Strategy<'_> {
    pub fn spec(&self) -> StrategySpec {
        match self {
            Self::None => StrategySpec::None,
            Self::Click { threshold } => StrategySpec::Click { threshold: *threshold },
            Self::Eeg { voting, .. } => StrategySpec::Eeg {
                threshold: voting.threshold,
            },
        }
    }

    fn feedback(&self, log: &SessionLog, judgment: &str) -> Result<Option<Satisfaction>> {
        match self {
            Self::None => Ok(None),
            Self::Click { threshold } => click_feedback(log, judgment, *threshold).map(Some),
            Self::Eeg {
                voting,
                predictor,
                source,
            } => eeg_feedback(log, judgment, *source, *predictor, voting).map(Some),
        }
    }
}

/// One displayed judgment during a simulated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStep {
    pub step: usize,
    pub judgment: String,
    pub feedback: Option<Satisfaction>,
    pub gold: Option<Satisfaction>,
    /// Intent weights after this step's feedback.
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub user: String,
    pub task: String,
    pub strategy: StrategySpec,
    pub steps: Vec<SessionStep>,
}

impl SessionTrace {
    pub fn shown(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.judgment.as_str()).collect()
    }

    /// `(prediction, gold)` for steps that have both.
    pub fn judged(&self) -> impl Iterator<Item = (Satisfaction, Satisfaction)> + '_ {
        self.steps.iter().filter_map(|s| Some((s.feedback?, s.gold?)))
    }
}

/// Replays one session. `None` shows judgments by descending overall
/// relevance; feedback strategies re-rank after every displayed judgment.
/// The session stops after as many judgments as the log viewed. Judgments
/// the log never viewed get no feedback and leave the profile unchanged.
pub fn simulate_session(
    log: &SessionLog,
    strategy: &Strategy<'_>,
    labels: &TaskLabels,
    cfg: &RerankConfig,
) -> Result<SessionTrace> {
    strategy.spec().validate()?;
    if labels.task != log.task {
        return Err(data_err!(
            "labels are for task {} but session {}/{} is not",
            labels.task,
            log.user,
            log.task
        ));
    }
    labels.validate()?;
    let pool = labels.candidate_pool(cfg.pool_size)?;
    let viewed = log.viewed_judgments();
    if let Some(v) = viewed.iter().find(|v| !pool.iter().any(|p| p == *v)) {
        return Err(data_err!(
            "session {}/{} viewed judgment {v}, which is not in the candidate pool",
            log.user,
            log.task
        ));
    }
    let stop = viewed.len().min(pool.len());
    let fixed = relevance_order(&pool, &labels.judgments)?;
    let mut state = RankingState::new(labels.intents.clone(), &pool)?;
    let mut steps = Vec::with_capacity(stop);
    for step in 0..stop {
        let next = match strategy {
            Strategy::None => fixed[step].clone(),
            _ => rank_remaining(&state, &labels.judgments)?
                .into_iter()
                .next()
                .expect("remaining nonempty"),
        };
        state.show(&next)?;
        let feedback = if log.viewed_paragraphs(&next).is_empty() {
            None
        } else {
            strategy.feedback(log, &next)?
        };
        if let Some(f) = feedback {
            state = apply_feedback(state, &labels.judgments, &next, f.is_satisfied(), cfg)?;
        }
        steps.push(SessionStep {
            step,
            gold: log.gold(&next),
            judgment: next,
            feedback,
            profile: state.profile.weights(),
        });
    }
    Ok(SessionTrace {
        user: log.user.clone(),
        task: log.task.clone(),
        strategy: strategy.spec(),
        steps,
    })
}
