//! Corpus generation, re-verification and statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use firsterr_core::inject::{sample_instance, verify_first_error, ErrorType};
use firsterr_core::labels::{label_steps, LabelStrategy, PUBLISHED_COUNTS};
use rayon::prelude::*;

use crate::config::CorpusConfig;
use crate::error::{Error, Result};
use crate::record::{to_line, GenerationStats, Record, SCHEMA_VERSION};

/// Items generated per parallel batch before they are written.
const BATCH: u64 = 256;

pub fn record_id(seed: u64, index: u64) -> String {
    format!("{seed}-{index:06}")
}

fn histogram(h: &BTreeMap<String, usize>) -> String {
    h.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

/// Builds the record for item `index`. Depends only on the config and the
/// index.
pub fn generate_one(cfg: &CorpusConfig, digest: &str, index: u64) -> Result<Record> {
    let s = sample_instance(&cfg.synth, &cfg.inj, cfg.seed, index);
    let rejections: BTreeMap<String, usize> = s.rejections.iter().map(|(r, n)| (r.name().to_string(), *n)).collect();
    let Some(inst) = s.instance else {
        return Err(Error::Exhausted { index, attempts: s.attempts, histogram: histogram(&rejections) });
    };
    let stats = GenerationStats { attempts: s.attempts, chain_seed: s.chain_seed, rejections };
    Ok(Record::from_instance(record_id(cfg.seed, index), digest.to_string(), &inst, stats))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Generates the corpus in index order, handing each record to `sink`.
/// Output does not depend on `workers`.
pub fn generate_with(cfg: &CorpusConfig, workers: usize, mut sink: impl FnMut(Record) -> Result<()>) -> Result<CorpusStats> {
    cfg.validate()?;
    let digest = cfg.digest();
    let pool = pool(workers)?;
    let mut stats = CorpusStats::default();
    let mut start = 0;
    while start < cfg.count {
        let end = (start + BATCH).min(cfg.count);
        let batch: Vec<Result<Record>> =
            pool.install(|| (start..end).into_par_iter().map(|i| generate_one(cfg, &digest, i)).collect());
        for r in batch {
            let r = r?;
            stats.add(&r);
            sink(r)?;
        }
        start = end;
    }
    Ok(stats)
}

pub fn generate_records(cfg: &CorpusConfig, workers: usize) -> Result<(Vec<Record>, CorpusStats)> {
    let mut out = Vec::with_capacity(cfg.count as usize);
    let stats = generate_with(cfg, workers, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok((out, stats))
}

pub fn generate_corpus(cfg: &CorpusConfig, workers: usize, mut w: impl Write) -> Result<CorpusStats> {
    let stats = generate_with(cfg, workers, |r| Ok(writeln!(w, "{}", to_line(&r))?))?;
    w.flush()?;
    Ok(stats)
}

/// Problems found in one record; empty when it re-verifies.
pub fn verify_record(r: &Record) -> Vec<String> {
    let inst = match r.to_instance() {
        Ok(i) => i,
        Err(e) => return vec![format!("unreadable: {e}")],
    };
    let mut fails = verify_first_error(&inst).failures;
    let labels = label_steps(&inst, LabelStrategy::AllAfterError);
    let names = |ls: &[firsterr_core::labels::Label]| ls.iter().map(|l| l.name().to_string()).collect::<Vec<_>>();
    if names(&labels.correct) != r.labels.correct || names(&labels.erroneous) != r.labels.erroneous {
        fails.push("stored labels disagree with the steps".into());
    }
    match r.labels.erroneous.iter().position(|l| l == "invalid") {
        Some(i) if i + 1 == r.k => {}
        _ => fails.push(format!("first invalid label is not at k={}", r.k)),
    }
    if inst.error_type().group().name() != r.error_group {
        fails.push(format!("error_group `{}` does not match {}", r.error_group, r.error_type));
    }
    fails
}

/// `(id, failures)` for every record that fails, in input order.
pub fn verify_records(records: &[Record], workers: usize) -> Result<Vec<(String, Vec<String>)>> {
    let pool = pool(workers)?;
    let all: Vec<Vec<String>> = pool.install(|| records.par_iter().map(verify_record).collect());
    Ok(records.iter().zip(all).filter(|(_, f)| !f.is_empty()).map(|(r, f)| (r.id.clone(), f)).collect())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusStats {
    pub total: usize,
    pub accepted: BTreeMap<ErrorType, usize>,
    pub rejections: BTreeMap<String, usize>,
    pub steps_correct: usize,
    pub steps_erroneous: usize,
    pub templates: BTreeSet<String>,
    pub config_digests: BTreeSet<String>,
}

impl CorpusStats {
    pub fn add(&mut self, r: &Record) {
        self.total += 1;
        if let Ok(e) = r.error_type.parse::<ErrorType>() {
            *self.accepted.entry(e).or_insert(0) += 1;
        }
        for (k, v) in &r.stats.rejections {
            *self.rejections.entry(k.clone()).or_insert(0) += v;
        }
        self.steps_correct += r.correct.len();
        self.steps_erroneous += r.erroneous.len();
        for s in r.correct.iter().chain(&r.erroneous) {
            if let Ok(rule) = firsterr_core::logic::parse_rule(&s.rule) {
                self.templates.insert(rule.template().name().to_string());
            }
        }
        self.config_digests.insert(r.config_digest.clone());
    }

    pub fn from_records(records: &[Record]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Empty);
        }
        let mut s = CorpusStats::default();
        records.iter().for_each(|r| s.add(r));
        Ok(s)
    }

    pub fn count(&self, e: ErrorType) -> usize {
        self.accepted.get(&e).copied().unwrap_or(0)
    }

    /// Share of `e` in percent.
    pub fn share(&self, e: ErrorType) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.count(e) as f64 / self.total as f64
        }
    }

    pub fn mean_steps(&self) -> (f64, f64) {
        let n = self.total.max(1) as f64;
        (self.steps_correct as f64 / n, self.steps_erroneous as f64 / n)
    }

    /// Flat `key = value` report.
    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("schema_version", SCHEMA_VERSION.to_string());
        put("config_digest", self.config_digests.iter().cloned().collect::<Vec<_>>().join(","));
        put("total", self.total.to_string());
        let (mc, me) = self.mean_steps();
        put("mean_steps_correct", format!("{mc:.3}"));
        put("mean_steps_erroneous", format!("{me:.3}"));
        put("templates_used", self.templates.len().to_string());
        for (e, _) in PUBLISHED_COUNTS {
            put(&format!("count.{}", e.name()), self.count(e).to_string());
            put(&format!("share.{}", e.name()), format!("{:.2}", self.share(e)));
        }
        for (k, v) in &self.rejections {
            put(&format!("rejections.{k}"), v.to_string());
        }
        out
    }

    /// Count/Share table, one row per error type.
    pub fn render_table(&self) -> String {
        let mut out = format!("{:<22} {:>7} {:>8}\n", "error_type", "Count", "Share");
        for (e, _) in PUBLISHED_COUNTS {
            out.push_str(&format!("{:<22} {:>7} {:>7.2}%\n", e.name(), self.count(e), self.share(e)));
        }
        let total_share: f64 = ErrorType::ALL.iter().map(|e| self.share(*e)).sum();
        out.push_str(&format!("{:<22} {:>7} {:>7.2}%\n", "total", self.total, total_share));
        out
    }
}
