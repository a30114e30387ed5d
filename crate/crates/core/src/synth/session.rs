use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::features::{Band, BandTable};
use crate::matrix::Matrix;
use crate::model::Annotation;
use crate::rerank::{
    apply_feedback, rank_remaining, relevance_order, select_candidate_pool, Intent, IntentProfile,
    JudgmentRelevance, RankingState, RelevanceMatrix, RerankConfig, TaskLabels,
};
use crate::signal::{EegSegment, SegmentKey};
use crate::sim::{SessionEvent, SessionLog};

/// Sum of independent AR(1) processes `y[n] = a y[n-1] + e[n]`, each with
/// the given stationary variance. `a = 0` is white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// `(a, stationary variance)` per component.
    pub components: Vec<(f64, f64)>,
}

impl NoiseModel {
    /// Roughly 1/f background with total RMS `rms_v`: white plus three
    /// increasingly slow components of equal variance.
    pub fn pinkish(rms_v: f64) -> Self {
        let poles = [0.0, 0.9, 0.99, 0.999];
        let v = rms_v * rms_v / poles.len() as f64;
        Self {
            components: poles.iter().map(|&a| (a, v)).collect(),
        }
    }

    /// Autocovariance at lag `l`.
    pub fn autocovariance(&self, lag: usize) -> f64 {
        self.components
            .iter()
            .map(|&(a, v)| if lag == 0 { v } else { v * libm::pow(a, lag as f64) })
            .sum()
    }

    /// Expected `|X_k|^2` of an `m`-point DFT of the stationary process:
    /// `sum_{|l|<m} (m - |l|) R(l) cos(2 pi k l / m)`.
    pub fn expected_bin_energy(&self, k: usize, m: usize) -> f64 {
        let mut e = m as f64 * self.autocovariance(0);
        for l in 1..m {
            e += 2.0 * (m - l) as f64 * self.autocovariance(l) * libm::cos(2.0 * PI * (k * l) as f64 / m as f64);
        }
        e
    }

    /// Draws `n` samples starting from the stationary distribution.
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(a, v) in &self.components {
            let innovation = libm::sqrt(v * (1.0 - a * a));
            let z: f64 = StandardNormal.sample(rng);
            let mut y = libm::sqrt(v) * z;
            for o in out.iter_mut() {
                let e: f64 = StandardNormal.sample(rng);
                y = a * y + innovation * e;
                *o += y;
            }
        }
        out
    }
}

/// Expected alpha-band energy of background noise in one `t`-second window,
/// with alpha bins taken as `ceil(lo t) .. ceil(hi t)`.
pub fn expected_alpha_energy(noise: &NoiseModel, sample_rate_hz: usize, t: u32) -> f64 {
    let alpha = &BandTable::default().bands[Band::Alpha.index()];
    let m = sample_rate_hz * t as usize;
    let lo = libm::ceil(alpha.lo_hz * t as f64 - 1e-9) as usize;
    let hi = libm::ceil(alpha.hi_hz * t as f64 - 1e-9) as usize;
    (lo..hi).map(|k| noise.expected_bin_energy(k, m)).sum()
}

/// Sinusoid amplitude that multiplies the expected alpha-band energy of a
/// 1 s window by `contrast`. A full-window sinusoid at an integer frequency
/// adds `(A m / 2)^2` to a single bin.
pub fn amplitude_for_contrast(noise: &NoiseModel, sample_rate_hz: usize, contrast: f64) -> Result<f64> {
    if !(contrast >= 1.0) {
        return Err(config_err!("contrast must be at least 1, got {contrast}"));
    }
    let base = expected_alpha_energy(noise, sample_rate_hz, 1);
    Ok(2.0 * libm::sqrt((contrast - 1.0) * base) / sample_rate_hz as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BurstSpec {
    /// Fixed amplitude in volts; excludes `contrast`.
    pub amplitude_v: Option<f64>,
    /// Target alpha-energy ratio of burst to background windows.
    pub contrast: Option<f64>,
    /// Burst length; `None` covers the whole paragraph.
    pub duration_s: Option<f64>,
    /// Integer frequencies are drawn from `min_hz..=max_hz`.
    pub min_hz: u32,
    pub max_hz: u32,
}

impl Default for BurstSpec {
    fn default() -> Self {
        Self {
            amplitude_v: None,
            contrast: Some(3.0),
            duration_s: None,
            min_hz: 8,
            max_hz: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionSpec {
    pub users: usize,
    pub tasks: usize,
    pub intents: usize,
    pub corpus_size: usize,
    pub pool_size: usize,
    pub judgments_viewed: usize,
    pub paragraphs_per_judgment: usize,
    pub paragraph_seconds: (f64, f64),
    pub gap_seconds: f64,
    pub sample_rate_hz: usize,
    pub channels: Vec<String>,
    pub noise_rms_v: f64,
    pub burst: BurstSpec,
    /// Paragraph satisfaction probability given a satisfied / unsatisfied judgment.
    pub paragraph_satisfied_prob: (f64, f64),
    /// Click probability for satisfied / unsatisfied paragraphs.
    pub click_prob: (f64, f64),
    pub hard_to_say_rate: f64,
}

impl Default for SessionSpec {
    fn default() -> Self {
        Self {
            users: 4,
            tasks: 3,
            intents: 2,
            corpus_size: 12,
            pool_size: 7,
            judgments_viewed: 5,
            paragraphs_per_judgment: 4,
            paragraph_seconds: (8.0, 12.0),
            gap_seconds: 0.5,
            sample_rate_hz: 1000,
            channels: ["Fz", "Cz", "Pz", "Oz"].iter().map(|s| String::from(*s)).collect(),
            noise_rms_v: 10e-6,
            burst: BurstSpec::default(),
            paragraph_satisfied_prob: (0.75, 0.25),
            click_prob: (0.6, 0.15),
            hard_to_say_rate: 0.05,
        }
    }
}

fn prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl SessionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.tasks == 0 || self.intents == 0 || self.paragraphs_per_judgment == 0 {
            return Err(config_err!("users, tasks, intents and paragraphs per judgment must be positive"));
        }
        if self.pool_size == 0 || self.corpus_size < self.pool_size {
            return Err(config_err!("corpus size must be at least the (positive) pool size"));
        }
        if self.intents > self.pool_size {
            return Err(config_err!("more intents than pool slots"));
        }
        if self.judgments_viewed == 0 || self.judgments_viewed > self.pool_size {
            return Err(config_err!("judgments viewed must lie in 1..=pool size"));
        }
        let (lo, hi) = self.paragraph_seconds;
        if !(lo > 0.0 && hi >= lo) || !(self.gap_seconds >= 0.0) {
            return Err(config_err!("paragraph durations must be positive with min <= max"));
        }
        if self.channels.is_empty() || self.sample_rate_hz < 100 {
            return Err(config_err!("need channels and a sample rate of at least 100 Hz"));
        }
        if !(self.noise_rms_v > 0.0) {
            return Err(config_err!("noise RMS must be positive"));
        }
        let b = &self.burst;
        if b.amplitude_v.is_some() && b.contrast.is_some() {
            return Err(config_err!("give either a burst amplitude or a contrast, not both"));
        }
        if b.amplitude_v.is_some_and(|a| !(a >= 0.0)) {
            return Err(config_err!("burst amplitude must be non-negative"));
        }
        if b.min_hz == 0 || b.max_hz < b.min_hz || 2 * b.max_hz as usize >= self.sample_rate_hz {
            return Err(config_err!("burst frequencies must be positive, ordered and below Nyquist"));
        }
        if b.duration_s.is_some_and(|d| !(d > 0.0 && d <= lo)) {
            return Err(config_err!("burst duration must be positive and fit the shortest paragraph"));
        }
        let (ps, pu) = self.paragraph_satisfied_prob;
        let (cs, cu) = self.click_prob;
        if ![ps, pu, cs, cu, self.hard_to_say_rate].into_iter().all(prob) {
            return Err(config_err!("probabilities must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel::pinkish(self.noise_rms_v)
    }

    pub fn burst_amplitude(&self) -> Result<f64> {
        match (self.burst.amplitude_v, self.burst.contrast) {
            (Some(a), _) => Ok(a),
            (None, Some(c)) => amplitude_for_contrast(&self.noise(), self.sample_rate_hz, c),
            (None, None) => Ok(0.0),
        }
    }
}

/// Generated sessions: logs with their continuous recordings (same order)
/// and one label file per task.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSessions {
    pub logs: Vec<SessionLog>,
    pub recordings: Vec<EegSegment>,
    pub labels: Vec<TaskLabels>,
    /// Ground-truth paragraph satisfaction (burst present), keyed like segments.
    pub paragraph_truth: Vec<(SegmentKey, bool)>,
}

fn task_labels(spec: &SessionSpec, task: &str, rng: &mut ChaCha8Rng) -> Result<TaskLabels> {
    let judgments = (0..spec.corpus_size)
        .map(|j| {
            let primary = j % spec.intents;
            let relevance: Vec<f64> = (0..spec.intents)
                .map(|i| if i == primary { rng.random_range(0.5..1.0) } else { rng.random_range(0.0..0.4) })
                .collect();
            let top = relevance.iter().copied().fold(0.0, f64::max);
            let grade = 1.0 + 3.0 * (0.5 * top + 0.5 * rng.random::<f64>());
            JudgmentRelevance {
                id: format!("j{:02}", j + 1),
                relevance,
                overall: libm::round(grade).clamp(1.0, 4.0) as u8,
            }
        })
        .collect();
    let judgments = RelevanceMatrix::new(judgments);
    let intents = IntentProfile::new(
        (0..spec.intents)
            .map(|i| Intent {
                id: format!("c{}", i + 1),
                weight: rng.random_range(0.5..=1.0),
            })
            .collect(),
    )?;
    let pool = select_candidate_pool(&judgments, spec.intents, spec.pool_size)?;
    Ok(TaskLabels {
        task: task.into(),
        intents,
        judgments,
        pool: Some(pool),
    })
}

/// Order the participant saw: fixed by relevance for the `None` arm, or
/// re-ranked from their own judgment labels for the `EEG` arm.
fn displayed_order(
    spec: &SessionSpec,
    labels: &TaskLabels,
    eeg_arm: bool,
    gold: &dyn Fn(&str) -> bool,
) -> Result<Vec<String>> {
    let pool = labels.pool.clone().expect("generated labels pin the pool");
    if !eeg_arm {
        let mut order = relevance_order(&pool, &labels.judgments)?;
        order.truncate(spec.judgments_viewed);
        return Ok(order);
    }
    let cfg = RerankConfig {
        pool_size: spec.pool_size,
        ..Default::default()
    };
    let mut state = RankingState::new(labels.intents.clone(), &pool)?;
    let mut order = Vec::new();
    for _ in 0..spec.judgments_viewed {
        let next = rank_remaining(&state, &labels.judgments)?.remove(0);
        state.show(&next)?;
        state = apply_feedback(state, &labels.judgments, &next, gold(&next), &cfg)?;
        order.push(next);
    }
    Ok(order)
}

/// Generates users, tasks, logs and recordings. Satisfied paragraphs carry
/// an alpha-range sinusoid; everything is a pure function of `spec` and `seed`.
pub fn synth_sessions(spec: &SessionSpec, seed: u64) -> Result<SynthSessions> {
    spec.validate()?;
    let amplitude = spec.burst_amplitude()?;
    let noise = spec.noise();
    let fs = spec.sample_rate_hz as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let tasks: Vec<String> = (1..=spec.tasks).map(|t| format!("t{t}")).collect();
    let labels = tasks
        .iter()
        .map(|t| task_labels(spec, t, &mut rng))
        .collect::<Result<Vec<_>>>()?;

    let mut out = SynthSessions {
        logs: Vec::new(),
        recordings: Vec::new(),
        labels: Vec::new(),
        paragraph_truth: Vec::new(),
    };
    for u in 0..spec.users {
        let user = format!("u{:02}", u + 1);
        let eeg_arm = u % 2 == 1;
        for task_labels in &labels {
            let task = task_labels.task.clone();
            let true_intent = rng.random_range(0..spec.intents);
            // Gold judgment satisfaction drawn from relevance to the latent intent.
            let pool = task_labels.pool.clone().expect("pinned pool");
            let gold: Vec<(String, bool)> = pool
                .iter()
                .map(|id| {
                    let d = task_labels.judgments.get(id).expect("pool ids exist").relevance[true_intent];
                    (id.clone(), rng.random_bool(d))
                })
                .collect();
            let lookup = |id: &str| gold.iter().find(|(g, _)| g == id).map(|(_, s)| *s).unwrap_or(false);
            let order = displayed_order(spec, task_labels, eeg_arm, &lookup)?;

            let mut events = Vec::new();
            let mut spans: Vec<(f64, f64, bool)> = Vec::new();
            let mut t = spec.gap_seconds;
            for judgment in &order {
                let satisfied = lookup(judgment);
                let p_sat = if satisfied {
                    spec.paragraph_satisfied_prob.0
                } else {
                    spec.paragraph_satisfied_prob.1
                };
                for p in 1..=spec.paragraphs_per_judgment {
                    let paragraph = format!("p{p}");
                    let para_sat = rng.random_bool(p_sat);
                    let (lo, hi) = spec.paragraph_seconds;
                    let dur = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                    // Whole milliseconds keep event boundaries exact in text.
                    let start = libm::round(t * 1000.0) / 1000.0;
                    let end = libm::round((t + dur) * 1000.0) / 1000.0;
                    events.push(SessionEvent::View {
                        judgment: judgment.clone(),
                        paragraph: paragraph.clone(),
                        start_s: start,
                        end_s: end,
                    });
                    let p_click = if para_sat { spec.click_prob.0 } else { spec.click_prob.1 };
                    if rng.random_bool(p_click) {
                        let at = libm::round((start + 0.5 * (end - start)) * 1000.0) / 1000.0;
                        events.push(SessionEvent::Click {
                            judgment: judgment.clone(),
                            paragraph: paragraph.clone(),
                            time_s: at,
                        });
                    }
                    let annotation = if rng.random_bool(spec.hard_to_say_rate) {
                        Annotation::HardToSay
                    } else if para_sat {
                        Annotation::Useful
                    } else {
                        Annotation::Useless
                    };
                    events.push(SessionEvent::Annotate {
                        judgment: judgment.clone(),
                        paragraph: paragraph.clone(),
                        annotation,
                    });
                    spans.push((start, end, para_sat));
                    out.paragraph_truth
                        .push((SegmentKey::new(user.as_str(), task.as_str(), judgment.as_str(), paragraph), para_sat));
                    t = end + spec.gap_seconds;
                }
                events.push(SessionEvent::Judge {
                    judgment: judgment.clone(),
                    satisfied,
                });
            }
            let sat_share = order.iter().filter(|j| lookup(j)).count() as f64 / order.len() as f64;
            events.push(SessionEvent::TaskLabel {
                ranking_quality: libm::round(1.0 + 3.0 * sat_share) as u8,
                satisfied: sat_share >= 0.5,
                arm: Some(String::from(if eeg_arm { "EEG" } else { "None" })),
            });

            let n = libm::ceil(t * fs) as usize;
            let mut rows: Vec<Vec<f64>> = spec.channels.iter().map(|_| noise.sample(n, &mut rng)).collect();
            for &(start, end, sat) in &spans {
                if !sat {
                    continue;
                }
                let f = f64::from(rng.random_range(spec.burst.min_hz..=spec.burst.max_hz));
                let (mut b0, mut b1) = (start, end);
                if let Some(d) = spec.burst.duration_s {
                    b0 = start + rng.random_range(0.0..=(end - start - d).max(0.0));
                    b1 = b0 + d;
                }
                let (i0, i1) = (libm::floor(b0 * fs) as usize, (libm::floor(b1 * fs) as usize).min(n));
                for row in rows.iter_mut() {
                    let phase = rng.random_range(0.0..2.0 * PI);
                    for (i, v) in row[i0..i1].iter_mut().enumerate() {
                        *v += amplitude * libm::sin(2.0 * PI * f * i as f64 / fs + phase);
                    }
                }
            }
            let samples = Matrix::from_rows(&rows).expect("equal lengths");
            out.recordings.push(EegSegment::new(
                spec.channels.clone(),
                fs,
                samples,
                SegmentKey::new(user.as_str(), task.as_str(), "", ""),
            )?);
            out.logs.push(SessionLog::new(user.as_str(), task, events));
        }
    }
    out.labels = labels;
    Ok(out)
}
