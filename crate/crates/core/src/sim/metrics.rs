use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{simulate_session, SessionLog, Strategy, StrategySpec};
use crate::error::{data_err, Result};
use crate::model::Satisfaction;
use crate::rerank::{RerankConfig, TaskLabels};

/// Binary confusion counts with satisfied as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
}

impl FeedbackMetrics {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.false_negative + self.true_negative
    }
}

pub fn evaluate_feedback(predictions: &[Satisfaction], gold: &[Satisfaction]) -> Result<FeedbackMetrics> {
    if predictions.len() != gold.len() {
        return Err(data_err!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        ));
    }
    if predictions.is_empty() {
        return Err(data_err!("no predictions to evaluate"));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, g) in predictions.iter().zip(gold) {
        match (p.is_satisfied(), g.is_satisfied()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let accuracy = (tp + tn) as f64 / predictions.len() as f64;
    // 2PR/(P+R) simplifies to 2TP/(2TP+FP+FN); zero when nothing is positive.
    let f1 = if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    };
    Ok(FeedbackMetrics {
        accuracy,
        f1,
        true_positive: tp,
        false_positive: fp,
        false_negative: fn_,
        true_negative: tn,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub strategy: StrategySpec,
    /// Micro-averaged over every judgment with both feedback and a gold
    /// label; absent when there is no such judgment.
    pub metrics: Option<FeedbackMetrics>,
    pub judged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmRow {
    pub arm: String,
    pub sessions: usize,
    pub mean_ranking_quality: f64,
    pub satisfied_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sessions: usize,
    pub strategies: Vec<StrategyRow>,
    pub arms: Vec<ArmRow>,
}

/// Simulates every log (sorted by user, then task) under every strategy.
pub fn compare_strategies(
    logs: &[SessionLog],
    strategies: &[Strategy<'_>],
    labels: &BTreeMap<String, TaskLabels>,
    cfg: &RerankConfig,
) -> Result<MetricsReport> {
    if logs.is_empty() {
        return Err(data_err!("no session logs to compare"));
    }
    let mut order: Vec<&SessionLog> = logs.iter().collect();
    order.sort_by(|a, b| (&a.user, &a.task).cmp(&(&b.user, &b.task)));
    let mut rows = Vec::with_capacity(strategies.len());
    for strategy in strategies {
        let (mut pred, mut gold) = (Vec::new(), Vec::new());
        for log in &order {
            let task = labels
                .get(&log.task)
                .ok_or_else(|| data_err!("no labels for task {} (session of {})", log.task, log.user))?;
            let trace = simulate_session(log, strategy, task, cfg)?;
            for (p, g) in trace.judged() {
                pred.push(p);
                gold.push(g);
            }
        }
        let metrics = if pred.is_empty() {
            None
        } else {
            Some(evaluate_feedback(&pred, &gold)?)
        };
        rows.push(StrategyRow {
            strategy: strategy.spec(),
            metrics,
            judged: pred.len(),
        });
    }
    Ok(MetricsReport {
        sessions: logs.len(),
        strategies: rows,
        arms: arm_rows(&order),
    })
}

/// Ranking quality and satisfaction grouped by arm, in order of first
/// appearance.
fn arm_rows(logs: &[&SessionLog]) -> Vec<ArmRow> {
    let mut groups: Vec<(String, Vec<(u8, bool)>)> = Vec::new();
    for log in logs {
        let Some((quality, satisfied, arm)) = log.task_label() else {
            continue;
        };
        let arm = arm.unwrap_or("unassigned");
        match groups.iter_mut().find(|(a, _)| a == arm) {
            Some((_, v)) => v.push((quality, satisfied)),
            None => groups.push((arm.into(), alloc::vec![(quality, satisfied)])),
        }
    }
    groups
        .into_iter()
        .map(|(arm, v)| {
            let n = v.len() as f64;
            ArmRow {
                arm,
                sessions: v.len(),
                mean_ranking_quality: v.iter().map(|(q, _)| f64::from(*q)).sum::<f64>() / n,
                satisfied_rate: v.iter().filter(|(_, s)| *s).count() as f64 / n,
            }
        })
        .collect()
}

fn pad(out: &mut String, cells: &[String], widths: &[usize]) {
    let mut line = String::new();
    for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
        if i + 1 == cells.len() {
            line.push_str(c);
        } else {
            let _ = write!(line, "{c:<w$}  ");
        }
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

fn table(header: &[&str], body: &[Vec<String>]) -> String {
    let header: Vec<String> = header.iter().map(|s| String::from(*s)).collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    pad(&mut out, &header, &widths);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    pad(&mut out, &rule, &widths);
    for row in body {
        pad(&mut out, row, &widths);
    }
    out
}

fn percent(v: f64) -> String {
    alloc::format!("{:.1}%", v * 100.0)
}

impl MetricsReport {
    /// Strategy, threshold, accuracy and F1; rows without feedback show "-".
    pub fn render_feedback_table(&self) -> String {
        let body: Vec<Vec<String>> = self
            .strategies
            .iter()
            .map(|r| {
                let dash = || String::from("-");
                vec_of([
                    r.strategy.name().into(),
                    r.strategy.threshold().map_or_else(dash, |t| alloc::format!("{t}")),
                    r.metrics.map_or_else(dash, |m| percent(m.accuracy)),
                    r.metrics.map_or_else(dash, |m| alloc::format!("{:.3}", m.f1)),
                    if r.strategy == StrategySpec::None {
                        dash()
                    } else {
                        alloc::format!("{}", r.judged)
                    },
                ])
            })
            .collect();
        table(&["Strategy", "Threshold", "Acc.", "F1", "Judged"], &body)
    }

    /// Mean ranking quality and satisfied share per arm.
    pub fn render_arm_table(&self) -> String {
        let body: Vec<Vec<String>> = self
            .arms
            .iter()
            .map(|a| {
                vec_of([
                    a.arm.clone(),
                    alloc::format!("{}", a.sessions),
                    alloc::format!("{:.2}", a.mean_ranking_quality),
                    percent(a.satisfied_rate),
                ])
            })
            .collect();
        table(&["Arm", "Sessions", "Ranking Quality", "Satisfied"], &body)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("Relevance feedback\n");
        out.push_str(&self.render_feedback_table());
        out.push_str("\nRe-ranking effect\n");
        out.push_str(&self.render_arm_table());
        out
    }
}

fn vec_of<const N: usize>(cells: [String; N]) -> Vec<String> {
    cells.into_iter().collect()
}

