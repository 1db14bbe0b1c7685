//! Metrics, Best-of-K selection and error-type sampling frequencies.

use std::collections::{BTreeMap, BTreeSet};

use firsterr_core::chain::{synthesize_chain, SynthesisConfig};
use firsterr_core::eval::{
    bestofk_select, evaluate, first_error_accuracy, majority_at_k, predict_first_error, Candidate, CandidatePool,
    EvalItem, Judge, JudgeContext, RandomJudge,
};
use firsterr_core::inject::ErrorType;
use firsterr_core::labels::{sample_error_type, ErrorWeights, PUBLISHED_COUNTS};
use proptest::prelude::*;

fn pool_strategy() -> impl Strategy<Value = CandidatePool> {
    prop::collection::vec((prop::collection::vec(0u8..=10, 0..6), 0u8..4, any::<bool>()), 1..9).prop_map(|cs| {
        CandidatePool {
            candidates: cs
                .into_iter()
                .map(|(s, a, c)| Candidate {
                    scores: s.into_iter().map(|x| f64::from(x) / 10.0).collect(),
                    answer: format!("a{a}"),
                    correct: c,
                })
                .collect(),
        }
    })
}

/// Compares every pair of candidates explicitly.
fn brute_bestofk(pool: &CandidatePool) -> usize {
    let score = |c: &Candidate| c.scores.iter().copied().fold(1.0f64, f64::min);
    (0..pool.candidates.len())
        .find(|&i| {
            pool.candidates.iter().enumerate().all(|(j, c)| {
                let (si, sj) = (score(&pool.candidates[i]), score(c));
                si > sj || (si == sj && i <= j)
            })
        })
        .unwrap()
}

fn brute_majority(pool: &CandidatePool) -> String {
    let n = |a: &str| pool.candidates.iter().filter(|c| c.answer == a).count();
    let best = pool.candidates.iter().map(|c| n(&c.answer)).max().unwrap();
    pool.candidates.iter().find(|c| n(&c.answer) == best).unwrap().answer.clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn bestofk_matches_brute_force(pool in pool_strategy()) {
        prop_assert_eq!(bestofk_select(&pool).unwrap(), brute_bestofk(&pool));
        prop_assert_eq!(majority_at_k(&pool).unwrap(), brute_majority(&pool));
    }

    /// Any increasing map of [0, 1] onto itself keeps the selection; an
    /// empty candidate's implicit 1.0 must stay fixed.
    #[test]
    fn bestofk_is_invariant_under_monotone_rescaling(pool in pool_strategy()) {
        let mut squashed = pool.clone();
        for c in &mut squashed.candidates {
            for s in &mut c.scores {
                *s = s.powi(3);
            }
        }
        prop_assert_eq!(bestofk_select(&pool).unwrap(), bestofk_select(&squashed).unwrap());
    }

    #[test]
    fn first_error_accuracy_bounded_by_prefix(scores in prop::collection::vec(0u8..=10, 1..12), k in 1usize..12) {
        let scores: Vec<f64> = scores.into_iter().map(|x| f64::from(x) / 10.0).collect();
        let k = k.min(scores.len());
        let pred = predict_first_error(&scores, 0.5);
        let acc = first_error_accuracy(&[pred], &[Some(k)]).unwrap();
        let clean_prefix = scores[..k - 1].iter().all(|s| *s >= 0.5);
        let bound = if clean_prefix { 1.0 } else { 0.0 };
        prop_assert!(acc <= bound);
    }
}

#[test]
fn empty_pool_is_an_error() {
    assert!(bestofk_select(&CandidatePool::default()).is_err());
    assert!(majority_at_k(&CandidatePool::default()).is_err());
}

#[test]
fn coin_flip_judge_is_near_chance() {
    let cfg = SynthesisConfig::default();
    let mut items = Vec::new();
    for seed in 0..300 {
        let c = synthesize_chain(&cfg, seed).unwrap();
        let th = c.theory().unwrap();
        let ctx = JudgeContext { theory: &th, base_facts: &c.base_facts, goal: c.goal };
        let scores = RandomJudge { seed: 7 }.score_trajectory(&ctx, &c.steps);
        items.push(EvalItem { group: "correct".into(), gold_first_error: None, gold_labels: vec![true; scores.len()], scores });
    }
    let rep = evaluate(&items, 0.5).unwrap();
    let n = rep.n_steps as f64;
    let half_width = 4.0 * (0.25 / n).sqrt();
    assert!((rep.all_step_acc - 0.5).abs() < half_width, "{} over {n} steps", rep.all_step_acc);
    // No error is predicted only if every step lands above the threshold.
    assert!(rep.first_error_acc < 0.05);
}

#[test]
fn published_weights_reproduce_shares() {
    let all: BTreeSet<ErrorType> = ErrorType::ALL.into_iter().collect();
    let w = ErrorWeights::default();
    let n = 200_000;
    let mut counts: BTreeMap<ErrorType, usize> = BTreeMap::new();
    for seed in 0..n {
        *counts.entry(sample_error_type(&w, &all, seed).unwrap()).or_insert(0) += 1;
    }
    for (e, published) in PUBLISHED_COUNTS {
        let want = f64::from(published) / 20_000.0;
        let got = counts[&e] as f64 / n as f64;
        assert!((got - want).abs() < 0.005, "{e}: {got} vs {want}");
    }
    let xe = counts[&ErrorType::XorAsEquiv] as f64 / n as f64;
    assert!((xe - 0.1805).abs() < 0.005);
}

#[test]
fn uniform_weights_pass_chi_square() {
    let all: BTreeSet<ErrorType> = ErrorType::ALL.into_iter().collect();
    let n = 110_000u64;
    let mut counts: BTreeMap<ErrorType, f64> = BTreeMap::new();
    for seed in 0..n {
        *counts.entry(sample_error_type(&ErrorWeights::uniform(), &all, seed).unwrap()).or_insert(0.0) += 1.0;
    }
    let expected = n as f64 / 11.0;
    let chi2: f64 = counts.values().map(|c| (c - expected).powi(2) / expected).sum();
    // 10 degrees of freedom, upper 0.1% point.
    assert!(chi2 < 29.59, "chi2 {chi2}");
}

#[test]
fn restricted_sampling_renormalizes() {
    let subset: BTreeSet<ErrorType> = [ErrorType::XorAsEquiv, ErrorType::VacuousTruthError].into_iter().collect();
    let n = 50_000u64;
    let hits = (0..n)
        .filter(|s| sample_error_type(&ErrorWeights::default(), &subset, *s).unwrap() == ErrorType::VacuousTruthError)
        .count() as f64;
    let want = 571.0 / (571.0 + 3610.0);
    assert!((hits / n as f64 - want).abs() < 0.01);
}
