//! Line-delimited JSON records, one object per line.
//!
//! Every record carries `schema_version`. Fields this version does not know
//! are kept in `extra` and written back unchanged.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use firsterr_core::chain::{CorrectChain, Step};
use firsterr_core::inject::{ErroneousChain, ErrorType, Instance};
use firsterr_core::labels::{label_steps, Label, LabelStrategy};
use firsterr_core::logic::{parse_literal, parse_rule, Literal};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub supports: Vec<String>,
    pub rule: String,
    pub conclusion: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelsRecord {
    pub correct: Vec<String>,
    pub erroneous: Vec<String>,
}

/// How the instance was obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct GenerationStats {
    pub attempts: usize,
    pub chain_seed: u64,
    pub rejections: BTreeMap<String, usize>,
}

/// Natural-language rendering of one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NlRecord {
    pub mode: String,
    pub nl_mode: String,
    pub name: String,
    pub background: String,
    pub goal: String,
    pub base_facts: Vec<String>,
    pub rules: Vec<String>,
    pub correct_steps: Vec<String>,
    pub erroneous_steps: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub schema_version: u32,
    pub id: String,
    pub config_digest: String,
    pub goal: String,
    pub base_facts: Vec<String>,
    pub rules: Vec<String>,
    pub correct: Vec<StepRecord>,
    pub erroneous: Vec<StepRecord>,
    pub k: usize,
    pub error_type: String,
    pub error_group: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_steps: Vec<usize>,
    pub labels: LabelsRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nl: Option<NlRecord>,
    #[serde(default)]
    pub stats: GenerationStats,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

fn step_record(s: &Step) -> StepRecord {
    StepRecord {
        supports: s.supports.iter().map(ToString::to_string).collect(),
        rule: s.rule.to_string(),
        conclusion: s.conclusion.to_string(),
    }
}

fn names(labels: &[Label]) -> Vec<String> {
    labels.iter().map(|l| l.name().to_string()).collect()
}

fn lits(texts: &[String]) -> Result<Vec<Literal>> {
    texts.iter().map(|t| Ok(parse_literal(t)?)).collect()
}

fn parse_step(s: &StepRecord) -> Result<Step> {
    Ok(Step::new(lits(&s.supports)?, parse_rule(&s.rule)?, parse_literal(&s.conclusion)?))
}

impl Record {
    pub fn from_instance(id: String, config_digest: String, inst: &Instance, stats: GenerationStats) -> Self {
        let labels = label_steps(inst, LabelStrategy::AllAfterError);
        let c = &inst.correct;
        Record {
            schema_version: SCHEMA_VERSION,
            id,
            config_digest,
            goal: c.goal.to_string(),
            base_facts: c.base_facts.iter().map(ToString::to_string).collect(),
            rules: c.rules.iter().map(ToString::to_string).collect(),
            correct: c.steps.iter().map(step_record).collect(),
            erroneous: inst.erroneous.steps.iter().map(step_record).collect(),
            k: inst.k(),
            error_type: inst.error_type().name().into(),
            error_group: inst.error_type().group().name().into(),
            dropped_steps: inst.erroneous.dropped_steps.clone(),
            labels: LabelsRecord { correct: names(&labels.correct), erroneous: names(&labels.erroneous) },
            nl: None,
            stats,
            extra: Map::new(),
        }
    }

    /// Rebuilds the symbolic instance. The counterfactual state log is
    /// recomputed from the steps.
    pub fn to_instance(&self) -> Result<Instance> {
        let rules = self.rules.iter().map(|r| Ok(parse_rule(r)?)).collect::<Result<Vec<_>>>()?;
        let correct = CorrectChain {
            base_facts: lits(&self.base_facts)?,
            rules,
            steps: self.correct.iter().map(parse_step).collect::<Result<_>>()?,
            goal: parse_literal(&self.goal)?,
        };
        let e: ErrorType = self.error_type.parse()?;
        let steps = self.erroneous.iter().map(parse_step).collect::<Result<Vec<_>>>()?;
        let mut erroneous = ErroneousChain::new(&correct.base_facts, steps, self.k, e)?;
        erroneous.dropped_steps = self.dropped_steps.clone();
        Ok(Instance { correct, erroneous })
    }

    /// Gold labels as booleans (`true` = valid).
    pub fn gold_labels(labels: &[String]) -> Result<Vec<bool>> {
        labels.iter().map(|l| Ok(l.parse::<Label>()?.is_valid())).collect()
    }
}

/// A trajectory with judge scores but no symbolic content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub schema_version: u32,
    pub id: String,
    #[serde(default = "default_group")]
    pub group: String,
    /// 1-based gold first error; absent for a correct trajectory.
    #[serde(default)]
    pub k: Option<usize>,
    pub labels: Vec<String>,
    pub scores: Vec<f64>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

fn default_group() -> String {
    "all".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub scores: Vec<f64>,
    pub answer: String,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRecord {
    pub schema_version: u32,
    pub id: String,
    #[serde(default)]
    pub gold_answer: Option<String>,
    pub candidates: Vec<CandidateRecord>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// Parses one line, checking the schema version before the shape.
pub fn parse_line<T: DeserializeOwned>(line: &str, lineno: usize) -> Result<T> {
    let v: Value =
        serde_json::from_str(line).map_err(|e| Error::Malformed { line: lineno, message: e.to_string() })?;
    match v.get("schema_version") {
        None => return Err(Error::Malformed { line: lineno, message: "missing schema_version".into() }),
        Some(Value::Number(n)) if n.as_u64() == Some(u64::from(SCHEMA_VERSION)) => {}
        Some(other) => {
            return Err(Error::SchemaMismatch { line: lineno, found: other.to_string(), expected: SCHEMA_VERSION })
        }
    }
    serde_json::from_value(v).map_err(|e| Error::Malformed { line: lineno, message: e.to_string() })
}

/// Reads every non-blank line. Line numbers in errors are 1-based.
pub fn read_jsonl<T: DeserializeOwned>(r: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&line, i + 1)?);
    }
    Ok(out)
}

pub fn to_line<T: Serialize>(rec: &T) -> String {
    serde_json::to_string(rec).expect("records serialize")
}

pub fn write_jsonl<T: Serialize>(mut w: impl Write, recs: &[T]) -> Result<()> {
    for r in recs {
        writeln!(w, "{}", to_line(r))?;
    }
    Ok(())
}

pub fn read_file<T: DeserializeOwned>(path: &std::path::Path) -> Result<Vec<T>> {
    read_jsonl(std::io::BufReader::new(std::fs::File::open(path)?))
}
