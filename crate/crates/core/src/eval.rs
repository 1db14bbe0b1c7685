//! Step-level judges, first-error and all-step metrics, Best-of-K.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::chain::Step;
use crate::error::{Error, Result};
use crate::logic::Literal;
use crate::prover::{PrefixWalker, Theory};
use crate::rng::splitmix64;

/// What a judge may see besides the steps: the rules, base facts and goal.
#[derive(Debug, Clone, Copy)]
pub struct JudgeContext<'a> {
    pub theory: &'a Theory,
    pub base_facts: &'a [Literal],
    pub goal: Literal,
}

/// Scores a step given the steps before it. Scores lie in `[0, 1]`; higher
/// means more likely valid.
pub trait Judge {
    fn score_step(&self, ctx: &JudgeContext<'_>, prefix: &[Step], current: &Step) -> f64;

    fn score_trajectory(&self, ctx: &JudgeContext<'_>, steps: &[Step]) -> Vec<f64> {
        (0..steps.len()).map(|i| self.score_step(ctx, &steps[..i], &steps[i])).collect()
    }
}

/// Prover-backed reference judge: 1.0 iff the step is prefix-valid and
/// every earlier step is too.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleJudge;

impl Judge for OracleJudge {
    fn score_step(&self, ctx: &JudgeContext<'_>, prefix: &[Step], current: &Step) -> f64 {
        let mut all = prefix.to_vec();
        all.push(current.clone());
        self.score_trajectory(ctx, &all).pop().unwrap_or(0.0)
    }

    fn score_trajectory(&self, ctx: &JudgeContext<'_>, steps: &[Step]) -> Vec<f64> {
        let mut out = Vec::with_capacity(steps.len());
        let Ok(mut walker) = PrefixWalker::new(ctx.theory, ctx.base_facts) else {
            return alloc::vec![0.0; steps.len()];
        };
        let mut ok = true;
        for s in steps {
            ok = ok && walker.assess(s).map(|a| a.is_valid()).unwrap_or(false);
            out.push(if ok { 1.0 } else { 0.0 });
            if ok {
                walker.push(s);
            }
        }
        out
    }
}

/// Returns the same score for every step.
#[derive(Debug, Clone, Copy)]
pub struct ConstantJudge(pub f64);

impl Judge for ConstantJudge {
    fn score_step(&self, _: &JudgeContext<'_>, _: &[Step], _: &Step) -> f64 {
        self.0
    }
}

/// Uniform pseudo-random scores, a deterministic function of the seed, the
/// step position and the step text.
#[derive(Debug, Clone, Copy)]
pub struct RandomJudge {
    pub seed: u64,
}

impl Judge for RandomJudge {
    fn score_step(&self, _: &JudgeContext<'_>, prefix: &[Step], current: &Step) -> f64 {
        let mut h = splitmix64(self.seed ^ prefix.len() as u64);
        for b in current.to_string().bytes() {
            h = splitmix64(h ^ u64::from(b));
        }
        (h >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Earliest 1-based step scored below `threshold`, or `None`.
pub fn predict_first_error(scores: &[f64], threshold: f64) -> Option<usize> {
    scores.iter().position(|s| *s < threshold).map(|i| i + 1)
}

/// Per-step validity predictions (`score >= threshold`).
pub fn predict_steps(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|s| *s >= threshold).collect()
}

/// Exact-match rate of first-error predictions. `None` means no error; an
/// empty input scores 0.
pub fn first_error_accuracy(preds: &[Option<usize>], gold: &[Option<usize>]) -> Result<f64> {
    if preds.len() != gold.len() {
        return Err(Error::LengthMismatch { left: preds.len(), right: gold.len() });
    }
    if preds.is_empty() {
        return Ok(0.0);
    }
    let hits = preds.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / preds.len() as f64)
}

fn check_shapes(preds: &[Vec<bool>], gold: &[Vec<bool>]) -> Result<()> {
    if preds.len() != gold.len() {
        return Err(Error::LengthMismatch { left: preds.len(), right: gold.len() });
    }
    for (p, g) in preds.iter().zip(gold) {
        if p.len() != g.len() {
            return Err(Error::LengthMismatch { left: p.len(), right: g.len() });
        }
    }
    Ok(())
}

/// Step classification accuracy, micro-averaged over all steps.
pub fn all_step_accuracy(preds: &[Vec<bool>], gold: &[Vec<bool>]) -> Result<f64> {
    check_shapes(preds, gold)?;
    let (mut hits, mut n) = (0usize, 0usize);
    for (p, g) in preds.iter().zip(gold) {
        hits += p.iter().zip(g).filter(|(a, b)| a == b).count();
        n += p.len();
    }
    Ok(if n == 0 { 0.0 } else { hits as f64 / n as f64 })
}

/// Step classification accuracy averaged per trajectory first.
pub fn all_step_accuracy_macro(preds: &[Vec<bool>], gold: &[Vec<bool>]) -> Result<f64> {
    check_shapes(preds, gold)?;
    let per: Vec<f64> = preds
        .iter()
        .zip(gold)
        .filter(|(p, _)| !p.is_empty())
        .map(|(p, g)| p.iter().zip(g).filter(|(a, b)| a == b).count() as f64 / p.len() as f64)
        .collect();
    Ok(if per.is_empty() { 0.0 } else { per.iter().sum::<f64>() / per.len() as f64 })
}

/// One scored trajectory with its gold annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    /// Breakdown key, e.g. the error type or `correct`.
    pub group: String,
    pub gold_first_error: Option<usize>,
    /// Gold validity per step.
    pub gold_labels: Vec<bool>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Breakdown {
    pub n: usize,
    pub first_error_acc: f64,
    pub all_step_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub n_instances: usize,
    pub n_steps: usize,
    pub threshold: f64,
    pub first_error_acc: f64,
    pub all_step_acc: f64,
    pub all_step_macro: f64,
    pub per_group: BTreeMap<String, Breakdown>,
}

/// Thresholds the scores of every item and reduces them to a report.
pub fn evaluate(items: &[EvalItem], threshold: f64) -> Result<EvalReport> {
    let reduce = |items: &[&EvalItem]| -> Result<(f64, f64, f64, usize)> {
        let fe_p: Vec<Option<usize>> = items.iter().map(|i| predict_first_error(&i.scores, threshold)).collect();
        let fe_g: Vec<Option<usize>> = items.iter().map(|i| i.gold_first_error).collect();
        let st_p: Vec<Vec<bool>> = items.iter().map(|i| predict_steps(&i.scores, threshold)).collect();
        let st_g: Vec<Vec<bool>> = items.iter().map(|i| i.gold_labels.clone()).collect();
        Ok((
            first_error_accuracy(&fe_p, &fe_g)?,
            all_step_accuracy(&st_p, &st_g)?,
            all_step_accuracy_macro(&st_p, &st_g)?,
            st_g.iter().map(Vec::len).sum(),
        ))
    };
    let all: Vec<&EvalItem> = items.iter().collect();
    let (fe, st, mac, n_steps) = reduce(&all)?;
    let mut groups: BTreeMap<String, Vec<&EvalItem>> = BTreeMap::new();
    for i in items {
        groups.entry(i.group.clone()).or_default().push(i);
    }
    let mut per_group = BTreeMap::new();
    for (g, members) in groups {
        let (gfe, gst, _, _) = reduce(&members)?;
        per_group.insert(g, Breakdown { n: members.len(), first_error_acc: gfe, all_step_acc: gst });
    }
    Ok(EvalReport {
        n_instances: items.len(),
        n_steps,
        threshold,
        first_error_acc: fe,
        all_step_acc: st,
        all_step_macro: mac,
        per_group,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub scores: Vec<f64>,
    pub answer: String,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidatePool {
    pub candidates: Vec<Candidate>,
}

/// Minimum step score; a candidate without steps scores 1.0.
pub fn trajectory_score(scores: &[f64]) -> f64 {
    scores.iter().copied().fold(1.0, f64::min)
}

/// Index of the candidate with the highest minimum step score; ties go to
/// the lowest index.
pub fn bestofk_select(pool: &CandidatePool) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in pool.candidates.iter().enumerate() {
        let s = trajectory_score(&c.scores);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptyPool)
}

/// Most frequent answer; ties go to the answer that occurs first.
pub fn majority_at_k(pool: &CandidatePool) -> Result<&str> {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (i, c) in pool.candidates.iter().enumerate() {
        counts.entry(c.answer.as_str()).or_insert((0, i)).0 += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .map(|(a, _)| a)
        .ok_or(Error::EmptyPool)
}

/// Whether any candidate is correct.
pub fn oracle_at_k(pool: &CandidatePool) -> Result<bool> {
    if pool.candidates.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok(pool.candidates.iter().any(|c| c.correct))
}

/// Aggregate Best-of-K, Majority@K and Oracle@K accuracy over pools.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectionReport {
    pub n_pools: usize,
    pub bestofk_acc: f64,
    /// Only pools with a gold answer count.
    pub majority_acc: f64,
    pub majority_n: usize,
    pub oracle_acc: f64,
}

pub fn selection_report(pools: &[(CandidatePool, Option<String>)]) -> Result<SelectionReport> {
    let mut rep = SelectionReport { n_pools: pools.len(), ..Default::default() };
    if pools.is_empty() {
        return Ok(rep);
    }
    let (mut best, mut maj, mut orc) = (0usize, 0usize, 0usize);
    for (pool, gold) in pools {
        if pool.candidates[bestofk_select(pool)?].correct {
            best += 1;
        }
        if oracle_at_k(pool)? {
            orc += 1;
        }
        if let Some(g) = gold {
            rep.majority_n += 1;
            if majority_at_k(pool)? == g {
                maj += 1;
            }
        }
    }
    let n = pools.len() as f64;
    rep.bestofk_acc = best as f64 / n;
    rep.oracle_acc = orc as f64 / n;
    rep.majority_acc = if rep.majority_n == 0 { 0.0 } else { maj as f64 / rep.majority_n as f64 };
    Ok(rep)
}
