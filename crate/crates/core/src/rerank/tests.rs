use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn j(id: &str, relevance: &[f64], overall: u8) -> JudgmentRelevance {
    JudgmentRelevance {
        id: id.into(),
        relevance: relevance.to_vec(),
        overall,
    }
}

fn ids(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| String::from(*s)).collect()
}

#[test]
fn score_examples() {
    let p = IntentProfile::from_weights(&[1.0, 0.5]).unwrap();
    assert!((ranking_score(&p, &[0.8, 0.2]).unwrap() - 0.9).abs() < 1e-15);
    let z = IntentProfile::from_weights(&[0.0, 0.0]).unwrap();
    assert_eq!(ranking_score(&z, &[0.3, 0.9]).unwrap(), 0.0);
    let one = IntentProfile::from_weights(&[1.0]).unwrap();
    assert_eq!(ranking_score(&one, &[1.0]).unwrap(), 1.0);
    assert!(matches!(ranking_score(&p, &[1.0]), Err(Error::Data(_))));
}

#[test]
fn profile_validation() {
    assert!(IntentProfile::from_weights(&[]).is_err());
    assert!(IntentProfile::from_weights(&[1.2]).is_err());
    assert!(IntentProfile::from_weights(&[-0.1]).is_err());
}

#[test]
fn ranking_examples() {
    let m = RelevanceMatrix::new(vec![j("a", &[0.3], 4), j("b", &[0.9], 1)]);
    let p = IntentProfile::from_weights(&[1.0]).unwrap();
    let s = RankingState::new(p.clone(), &ids(&["a", "b"])).unwrap();
    assert_eq!(rank_remaining(&s, &m).unwrap(), ids(&["b", "a"]));

    let m = RelevanceMatrix::new(vec![j("a", &[0.5], 2), j("b", &[0.5], 4)]);
    let s = RankingState::new(p.clone(), &ids(&["a", "b"])).unwrap();
    assert_eq!(rank_remaining(&s, &m).unwrap(), ids(&["b", "a"]));

    let m = RelevanceMatrix::new(vec![j("10", &[0.5], 2), j("9", &[0.5], 2)]);
    let s = RankingState::new(p, &ids(&["10", "9"])).unwrap();
    assert_eq!(rank_remaining(&s, &m).unwrap(), ids(&["9", "10"]));
}

#[test]
fn satisfied_feedback_keeps_profile() {
    let m = RelevanceMatrix::new(vec![j("a", &[1.0, 0.1], 3)]);
    let p = IntentProfile::from_weights(&[0.8, 0.6]).unwrap();
    let mut s = RankingState::new(p.clone(), &ids(&["a"])).unwrap();
    s.show("a").unwrap();
    let s2 = apply_feedback(s, &m, "a", true, &RerankConfig::default()).unwrap();
    assert_eq!(s2.profile, p);
    assert_eq!(s2.history.len(), 1);
}

#[test]
fn unsatisfied_feedback_halves_top_intent() {
    let m = RelevanceMatrix::new(vec![j("a", &[1.0, 0.1], 3)]);
    let p = IntentProfile::from_weights(&[0.8, 0.6]).unwrap();
    let mut s = RankingState::new(p, &ids(&["a"])).unwrap();
    s.show("a").unwrap();
    let s = apply_feedback(s, &m, "a", false, &RerankConfig::default()).unwrap();
    assert_eq!(s.profile.weights(), vec![0.4, 0.6]);
    assert_eq!(s.history[0].halved, vec![0]);
}

#[test]
fn profile_only_blame_uses_intent_weight() {
    let m = RelevanceMatrix::new(vec![j("a", &[0.1, 1.0], 3)]);
    let p = IntentProfile::from_weights(&[0.8, 0.6]).unwrap();
    let mut s = RankingState::new(p, &ids(&["a"])).unwrap();
    s.show("a").unwrap();
    let cfg = RerankConfig {
        blame: BlameMode::ProfileOnly,
        ..Default::default()
    };
    let s2 = apply_feedback(s.clone(), &m, "a", false, &cfg).unwrap();
    assert_eq!(s2.profile.weights(), vec![0.4, 0.6]);
    let s3 = apply_feedback(s, &m, "a", false, &RerankConfig::default()).unwrap();
    assert_eq!(s3.profile.weights(), vec![0.8, 0.3]);
}

#[test]
fn repeated_halving() {
    let m = RelevanceMatrix::new(vec![j("a", &[0.7], 3)]);
    let mut s = RankingState::new(IntentProfile::from_weights(&[0.9]).unwrap(), &ids(&["a"])).unwrap();
    s.show("a").unwrap();
    for n in 1..=10 {
        s = apply_feedback(s, &m, "a", false, &RerankConfig::default()).unwrap();
        assert_eq!(s.profile.weights()[0], 0.9 / f64::from(1u32 << n));
    }
}

#[test]
fn feedback_for_unshown_judgment_fails() {
    let m = RelevanceMatrix::new(vec![j("a", &[0.7], 3), j("b", &[0.2], 3)]);
    let s = RankingState::new(IntentProfile::from_weights(&[0.9]).unwrap(), &ids(&["a", "b"])).unwrap();
    assert!(matches!(apply_feedback(s, &m, "a", false, &RerankConfig::default()), Err(Error::Data(_))));
}

#[test]
fn pool_deduplicates_shared_argmax() {
    let m = RelevanceMatrix::new(vec![
        j("A", &[1.0, 1.0], 1),
        j("b", &[0.1, 0.2], 4),
        j("c", &[0.2, 0.1], 3),
        j("d", &[0.0, 0.0], 2),
        j("e", &[0.3, 0.3], 4),
        j("f", &[0.0, 0.5], 1),
        j("g", &[0.4, 0.0], 2),
        j("h", &[0.0, 0.0], 1),
    ]);
    let pool = select_candidate_pool(&m, 2, 7).unwrap();
    assert_eq!(pool.len(), 7);
    assert_eq!(pool.iter().filter(|p| *p == "A").count(), 1);
    assert_eq!(pool, ids(&["A", "b", "e", "c", "d", "g", "f"]));
}

#[test]
fn pool_contains_distinct_argmaxes() {
    let mut js: Vec<JudgmentRelevance> = (0..10).map(|i| j(&format!("{i}"), &[0.1, 0.1, 0.1], 4)).collect();
    js.push(j("x", &[0.9, 0.0, 0.0], 1));
    js.push(j("y", &[0.0, 0.9, 0.0], 1));
    js.push(j("z", &[0.0, 0.0, 0.9], 1));
    let pool = select_candidate_pool(&RelevanceMatrix::new(js), 3, 7).unwrap();
    assert_eq!(&pool[..3], &ids(&["x", "y", "z"])[..]);
    assert_eq!(&pool[3..], &ids(&["0", "1", "2", "3"])[..]);
}

#[test]
fn pool_larger_than_corpus_fails() {
    let m = RelevanceMatrix::new(vec![j("a", &[0.7], 3)]);
    assert!(matches!(select_candidate_pool(&m, 1, 7), Err(Error::Data(_))));
}

/// Literal rule application: for each intent, scan for the max D then pick
/// the first by (r desc, id asc); then repeatedly pick the best unpicked
/// by (r desc, id asc).
fn pool_oracle(m: &RelevanceMatrix, intents: usize, size: usize) -> Vec<String> {
    let mut pool: Vec<String> = Vec::new();
    for i in 0..intents {
        let max = m.judgments.iter().map(|j| j.relevance[i]).fold(f64::NEG_INFINITY, f64::max);
        let mut best: Option<&JudgmentRelevance> = None;
        for cand in m.judgments.iter().filter(|j| j.relevance[i] == max) {
            best = match best {
                Some(b) if b.overall > cand.overall || (b.overall == cand.overall && compare_ids(&b.id, &cand.id).is_lt()) => Some(b),
                _ => Some(cand),
            };
        }
        let id = best.unwrap().id.clone();
        if !pool.contains(&id) {
            pool.push(id);
        }
    }
    while pool.len() < size {
        let mut best: Option<&JudgmentRelevance> = None;
        for cand in m.judgments.iter().filter(|j| !pool.contains(&j.id)) {
            best = match best {
                Some(b) if b.overall > cand.overall || (b.overall == cand.overall && compare_ids(&b.id, &cand.id).is_lt()) => Some(b),
                _ => Some(cand),
            };
        }
        pool.push(best.unwrap().id.clone());
    }
    pool
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, intents: usize, grid: bool) -> RelevanceMatrix {
    RelevanceMatrix::new(
        (0..n)
            .map(|k| {
                let rel = (0..intents)
                    .map(|_| if grid { f64::from(rng.random_range(0..5u8)) / 4.0 } else { rng.random::<f64>() })
                    .collect::<Vec<_>>();
                j(&format!("{}", k * 11 % n), &rel, rng.random_range(1..=4))
            })
            .collect(),
    )
}

#[test]
fn pool_matches_rule_oracle_on_random_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for round in 0..200 {
        let intents = rng.random_range(1..=4);
        let m = random_matrix(&mut rng, 30, intents, round % 2 == 0);
        let pool = select_candidate_pool(&m, intents, 7).unwrap();
        assert_eq!(pool, pool_oracle(&m, intents, 7));
        for i in 0..intents {
            let max = m.judgments.iter().map(|j| j.relevance[i]).fold(0.0, f64::max);
            assert!(pool.iter().any(|id| m.get(id).unwrap().relevance[i] == max));
        }
    }
}

/// Full sort oracle: selection sort by the stated key.
fn rank_oracle(profile: &IntentProfile, m: &RelevanceMatrix, pool: &[String]) -> Vec<String> {
    let mut left: Vec<&JudgmentRelevance> = pool.iter().map(|id| m.get(id).unwrap()).collect();
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for k in 1..left.len() {
            let (a, b) = (left[k], left[best]);
            let (sa, sb) = (ranking_score(profile, &a.relevance).unwrap(), ranking_score(profile, &b.relevance).unwrap());
            let better = sa > sb || (sa == sb && (a.overall > b.overall || (a.overall == b.overall && compare_ids(&a.id, &b.id).is_lt())));
            if better {
                best = k;
            }
        }
        out.push(left.remove(best).id.clone());
    }
    out
}

#[test]
fn ranking_matches_sort_oracle_on_random_pools() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for round in 0..200 {
        let intents = rng.random_range(2..=3);
        let m = random_matrix(&mut rng, 7, intents, round % 2 == 1);
        let w: Vec<f64> = (0..intents).map(|_| rng.random::<f64>()).collect();
        let p = IntentProfile::from_weights(&w).unwrap();
        let pool: Vec<String> = m.judgments.iter().map(|j| j.id.clone()).collect();
        let s = RankingState::new(p.clone(), &pool).unwrap();
        assert_eq!(rank_remaining(&s, &m).unwrap(), rank_oracle(&p, &m, &pool));
    }
}

proptest! {
    #[test]
    fn feedback_never_increases_weights(w in prop::collection::vec(0.0f64..=1.0, 1..5), seed in 0u64..500, t in 1usize..4, sat in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, 3, w.len(), false);
        let pool: Vec<String> = m.judgments.iter().map(|j| j.id.clone()).collect();
        let mut s = RankingState::new(IntentProfile::from_weights(&w).unwrap(), &pool).unwrap();
        let first = show_next(&mut s, &m).unwrap().unwrap();
        let before = s.profile.weights();
        let s = apply_feedback(s, &m, &first, sat, &RerankConfig { top_t: t, ..Default::default() }).unwrap();
        let after = s.profile.weights();
        let halved = after.iter().zip(&before).filter(|(a, b)| a != b).count();
        prop_assert!(halved <= t);
        for (a, b) in after.iter().zip(&before) {
            prop_assert!(*a <= *b && *a >= 0.0);
            prop_assert!(*a == *b || *a == *b / 2.0);
        }
        prop_assert!(s.profile.validate().is_ok());
        let mut all = s.shown.clone();
        all.extend(s.remaining.iter().cloned());
        all.sort();
        let mut p2 = pool.clone();
        p2.sort();
        prop_assert_eq!(all, p2);
    }

    #[test]
    fn uniform_scaling_keeps_order(seed in 0u64..10_000, c in 0.001f64..1.0, grid in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let intents = rng.random_range(2..=3);
        let m = random_matrix(&mut rng, 7, intents, grid);
        let w: Vec<f64> = (0..intents).map(|_| if grid { f64::from(rng.random_range(0..5u8)) / 4.0 } else { rng.random::<f64>() }).collect();
        let p = IntentProfile::from_weights(&w).unwrap();
        let pool: Vec<String> = m.judgments.iter().map(|j| j.id.clone()).collect();
        let s = RankingState::new(p.clone(), &pool).unwrap();
        // Grid values are dyadic, so power-of-two scaling is exact and keeps ties.
        let c = if grid { 1.0 / f64::from(1u32 << rng.random_range(0..8)) } else { c };
        let scaled = RankingState::new(p.scaled(c), &pool).unwrap();
        prop_assert_eq!(rank_remaining(&s, &m).unwrap(), rank_remaining(&scaled, &m).unwrap());
    }
}

#[test]
fn replay_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let m = random_matrix(&mut rng, 7, 3, false);
    let pool: Vec<String> = m.judgments.iter().map(|j| j.id.clone()).collect();
    let run = || {
        let mut s = RankingState::new(IntentProfile::from_weights(&[0.9, 0.5, 0.7]).unwrap(), &pool).unwrap();
        let mut fb = [false, true, false, false, true, false, true].into_iter();
        while let Some(id) = show_next(&mut s, &m).unwrap() {
            s = apply_feedback(s, &m, &id, fb.next().unwrap(), &RerankConfig::default()).unwrap();
        }
        s
    };
    let (a, b) = (run(), run());
    assert_eq!(a.shown, b.shown);
    assert_eq!(a, b);
    assert!(a.remaining.is_empty());
}

#[test]
fn relevance_order_sorts_by_overall_then_id() {
    let m = RelevanceMatrix::new(vec![j("c", &[0.0], 2), j("a", &[1.0], 2), j("b", &[0.5], 4)]);
    assert_eq!(relevance_order(&ids(&["c", "a", "b"]), &m).unwrap(), ids(&["b", "a", "c"]));
}

#[test]
fn labels_validation() {
    let bad_row = TaskLabels {
        task: "t".into(),
        intents: IntentProfile::from_weights(&[1.0, 1.0]).unwrap(),
        judgments: RelevanceMatrix::new(vec![j("a", &[0.5], 2)]),
        pool: None,
    };
    assert!(matches!(bad_row.validate(), Err(Error::Data(_))));
    let bad_r = TaskLabels {
        judgments: RelevanceMatrix::new(vec![j("a", &[0.5, 0.5], 5)]),
        ..bad_row.clone()
    };
    assert!(matches!(bad_r.validate(), Err(Error::Data(_))));
    let bad_pool = TaskLabels {
        judgments: RelevanceMatrix::new(vec![j("a", &[0.5, 0.5], 1)]),
        pool: Some(ids(&["b"])),
        ..bad_row
    };
    assert!(matches!(bad_pool.validate(), Err(Error::Data(_))));
}
