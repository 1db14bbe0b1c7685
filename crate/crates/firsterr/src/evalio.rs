//! Judge selection and evaluation inputs: corpus files, scored-only
//! trajectory files and candidate pools.

use std::str::FromStr;

use firsterr_core::eval::{
    selection_report, Candidate, CandidatePool, ConstantJudge, EvalItem, EvalReport, Judge, JudgeContext, OracleJudge,
    RandomJudge, SelectionReport,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::Settings;
use crate::error::{Error, Result};
use crate::record::{PoolRecord, Record, ScoredRecord, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JudgeSpec {
    Oracle,
    Constant(f64),
    Random(u64),
}

impl FromStr for JudgeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown judge `{s}` (oracle, constant:<score>, random:<seed>)"));
        match s.split_once(':') {
            None if s == "oracle" => Ok(JudgeSpec::Oracle),
            Some(("constant", v)) => {
                let x: f64 = v.parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&x) {
                    return Err(bad());
                }
                Ok(JudgeSpec::Constant(x))
            }
            Some(("random", v)) => Ok(JudgeSpec::Random(v.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for JudgeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            JudgeSpec::Oracle => f.write_str("oracle"),
            JudgeSpec::Constant(x) => write!(f, "constant:{x}"),
            JudgeSpec::Random(s) => write!(f, "random:{s}"),
        }
    }
}

impl JudgeSpec {
    pub fn build(self) -> Box<dyn Judge + Sync> {
        match self {
            JudgeSpec::Oracle => Box::new(OracleJudge),
            JudgeSpec::Constant(x) => Box::new(ConstantJudge(x)),
            JudgeSpec::Random(seed) => Box::new(RandomJudge { seed }),
        }
    }
}

fn check_scores(id: &str, scores: &[f64]) -> Result<()> {
    if scores.iter().any(|s| !s.is_finite() || !(0.0..=1.0).contains(s)) {
        return Err(Error::Config(format!("{id}: scores must lie in [0, 1]")));
    }
    Ok(())
}

fn item_for(r: &Record, judge: &(dyn Judge + Sync), erroneous_only: bool) -> Result<Vec<EvalItem>> {
    let inst = r.to_instance()?;
    let c = &inst.correct;
    let th = c.theory()?;
    let ctx = JudgeContext { theory: &th, base_facts: &c.base_facts, goal: c.goal };
    let mut out = vec![EvalItem {
        group: r.error_type.clone(),
        gold_first_error: Some(r.k),
        gold_labels: Record::gold_labels(&r.labels.erroneous)?,
        scores: judge.score_trajectory(&ctx, &inst.erroneous.steps),
    }];
    if !erroneous_only {
        out.push(EvalItem {
            group: "correct".into(),
            gold_first_error: None,
            gold_labels: Record::gold_labels(&r.labels.correct)?,
            scores: judge.score_trajectory(&ctx, &c.steps),
        });
    }
    for i in &out {
        check_scores(&r.id, &i.scores)?;
    }
    Ok(out)
}

/// Scores every trajectory of a corpus. Correct chains join as group
/// `correct` unless `erroneous_only`.
pub fn corpus_items(records: &[Record], spec: JudgeSpec, erroneous_only: bool, workers: usize) -> Result<Vec<EvalItem>> {
    let judge = spec.build();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let per: Vec<Result<Vec<EvalItem>>> =
        pool.install(|| records.par_iter().map(|r| item_for(r, judge.as_ref(), erroneous_only)).collect());
    let mut out = Vec::new();
    for p in per {
        out.extend(p?);
    }
    Ok(out)
}

pub fn scored_items(records: &[ScoredRecord], erroneous_only: bool) -> Result<Vec<EvalItem>> {
    let mut out = Vec::new();
    for r in records {
        let labels = Record::gold_labels(&r.labels)?;
        if labels.len() != r.scores.len() {
            return Err(Error::Config(format!("{}: {} labels but {} scores", r.id, labels.len(), r.scores.len())));
        }
        check_scores(&r.id, &r.scores)?;
        if erroneous_only && r.k.is_none() {
            continue;
        }
        out.push(EvalItem { group: r.group.clone(), gold_first_error: r.k, gold_labels: labels, scores: r.scores.clone() });
    }
    Ok(out)
}

pub fn pools(records: &[PoolRecord]) -> Result<Vec<(CandidatePool, Option<String>)>> {
    records
        .iter()
        .map(|r| {
            if r.candidates.is_empty() {
                return Err(Error::Config(format!("{}: empty candidate pool", r.id)));
            }
            for c in &r.candidates {
                check_scores(&r.id, &c.scores)?;
            }
            let candidates = r
                .candidates
                .iter()
                .map(|c| Candidate { scores: c.scores.clone(), answer: c.answer.clone(), correct: c.correct })
                .collect();
            Ok((CandidatePool { candidates }, r.gold_answer.clone()))
        })
        .collect()
}

pub fn pool_report(records: &[PoolRecord]) -> Result<SelectionReport> {
    Ok(selection_report(&pools(records)?)?)
}

/// Flat `key = value` rendering of a step-level report.
pub fn render_eval(rep: &EvalReport, header: &Settings) -> String {
    let mut out = String::new();
    for (k, v) in header {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out.push_str(&format!("n_instances = {}\nn_steps = {}\n", rep.n_instances, rep.n_steps));
    out.push_str(&format!("first_error_acc = {:.6}\n", rep.first_error_acc));
    out.push_str(&format!("all_step_acc = {:.6}\n", rep.all_step_acc));
    out.push_str(&format!("all_step_macro = {:.6}\n", rep.all_step_macro));
    for (g, b) in &rep.per_group {
        out.push_str(&format!("group.{g}.n = {}\n", b.n));
        out.push_str(&format!("group.{g}.first_error_acc = {:.6}\n", b.first_error_acc));
        out.push_str(&format!("group.{g}.all_step_acc = {:.6}\n", b.all_step_acc));
    }
    out
}

pub fn eval_json(rep: &EvalReport, header: &Settings) -> Value {
    let groups: serde_json::Map<String, Value> = rep
        .per_group
        .iter()
        .map(|(g, b)| (g.clone(), json!({ "n": b.n, "first_error_acc": b.first_error_acc, "all_step_acc": b.all_step_acc })))
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "settings": header,
        "n_instances": rep.n_instances,
        "n_steps": rep.n_steps,
        "threshold": rep.threshold,
        "first_error_acc": rep.first_error_acc,
        "all_step_acc": rep.all_step_acc,
        "all_step_macro": rep.all_step_macro,
        "per_group": groups,
    })
}

pub fn render_selection(rep: &SelectionReport, header: &Settings) -> String {
    let mut out = String::new();
    for (k, v) in header {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out.push_str(&format!("n_pools = {}\n", rep.n_pools));
    out.push_str(&format!("bestofk_acc = {:.6}\n", rep.bestofk_acc));
    out.push_str(&format!("majority_acc = {:.6}\nmajority_n = {}\n", rep.majority_acc, rep.majority_n));
    out.push_str(&format!("oracle_acc = {:.6}\n", rep.oracle_acc));
    out
}

pub fn selection_json(rep: &SelectionReport, header: &Settings) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "settings": header,
        "n_pools": rep.n_pools,
        "bestofk_acc": rep.bestofk_acc,
        "majority_acc": rep.majority_acc,
        "majority_n": rep.majority_n,
        "oracle_acc": rep.oracle_acc,
    })
}
