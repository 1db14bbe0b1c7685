//! Flat `key = value` configuration.
//!
//! One setting per line, `#` starts a comment, keys are unique. Command-line
//! flags are merged over the file before the settings are interpreted.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use firsterr_core::chain::SynthesisConfig;
use firsterr_core::inject::{ErrorType, InjectionConfig, KRange};
use firsterr_core::labels::ErrorWeights;
use firsterr_core::logic::RuleTemplate;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::record::SCHEMA_VERSION;

pub type Settings = BTreeMap<String, String>;

pub fn parse_kv(text: &str) -> Result<Settings> {
    let mut out = Settings::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected `key = value`", i + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(out)
}

pub fn read_kv(path: &Path) -> Result<Settings> {
    parse_kv(&std::fs::read_to_string(path)?)
}

/// Renders settings back to the file format, sorted by key.
pub fn render_kv(s: &Settings) -> String {
    s.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// Hex SHA-256 of the rendered settings.
pub fn digest(s: &Settings) -> String {
    let h = Sha256::digest(render_kv(s).as_bytes());
    h.iter().map(|b| format!("{b:02x}")).collect()
}

/// Weights from a preset name (`default`, `uniform`) or a file of
/// `error_type = weight` lines.
pub fn load_weights(spec: &str) -> Result<ErrorWeights> {
    if let Some(w) = ErrorWeights::preset(spec) {
        return Ok(w);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Config(format!("`{spec}` is neither a weight preset nor a file")));
    }
    weights_from_settings(&read_kv(path)?)
}

pub fn weights_from_settings(s: &Settings) -> Result<ErrorWeights> {
    let mut map = BTreeMap::new();
    for (k, v) in s {
        let e: ErrorType = k.parse()?;
        map.insert(e, parse_value::<f64>(k, v)?);
    }
    Ok(ErrorWeights::new(map)?)
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

/// Everything that determines a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub count: u64,
    pub seed: u64,
    pub synth: SynthesisConfig,
    pub inj: InjectionConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { count: 1000, seed: 0, synth: SynthesisConfig::default(), inj: InjectionConfig::default() }
    }
}

impl CorpusConfig {
    /// Interprets settings over the defaults. Keys outside the corpus
    /// vocabulary are ignored so one file can serve several subcommands;
    /// `template.<NAME>` keys set template weights.
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let mut c = CorpusConfig::default();
        for (k, v) in s {
            match k.as_str() {
                "count" => c.count = parse_value(k, v)?,
                "seed" => c.seed = parse_value(k, v)?,
                "weights" => c.inj.weights = load_weights(v)?,
                "min_steps" => c.synth.min_steps = parse_value(k, v)?,
                "max_steps" => c.synth.max_steps = parse_value(k, v)?,
                "max_facts" => c.synth.max_facts = parse_value(k, v)?,
                "synthesis_attempts" => c.synth.max_attempts = parse_value(k, v)?,
                "p_fresh" => c.synth.p_fresh = parse_value(k, v)?,
                "distractor_rules" => c.synth.distractor_rules = parse_value(k, v)?,
                "min_useful_steps" => c.synth.min_useful_steps = parse_value(k, v)?,
                "max_attempts" => c.inj.max_attempts = parse_value(k, v)?,
                "allow_step_drop" => c.inj.allow_step_drop = parse_value(k, v)?,
                "k_min" | "k_max" => {}
                _ => {
                    if let Some(t) = k.strip_prefix("template.") {
                        let t: RuleTemplate = t.parse()?;
                        c.synth.template_weights.insert(t, parse_value(k, v)?);
                    }
                }
            }
        }
        match (s.get("k_min"), s.get("k_max")) {
            (None, None) => {}
            (Some(a), Some(b)) => c.inj.k_range = KRange::Explicit { min: parse_value("k_min", a)?, max: parse_value("k_max", b)? },
            _ => return Err(Error::Config("k_min and k_max must be set together".into())),
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("count must be positive".into()));
        }
        if self.inj.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be positive".into()));
        }
        self.synth.validate()?;
        Ok(())
    }

    /// Canonical effective settings: every value spelled out, weights
    /// included by value. Paths and worker counts never appear.
    pub fn effective(&self) -> Settings {
        let mut s = Settings::new();
        let mut put = |k: &str, v: String| {
            s.insert(k.to_string(), v);
        };
        put("schema_version", SCHEMA_VERSION.to_string());
        put("count", self.count.to_string());
        put("seed", self.seed.to_string());
        put("min_steps", self.synth.min_steps.to_string());
        put("max_steps", self.synth.max_steps.to_string());
        put("max_facts", self.synth.max_facts.to_string());
        put("synthesis_attempts", self.synth.max_attempts.to_string());
        put("p_fresh", self.synth.p_fresh.to_string());
        put("distractor_rules", self.synth.distractor_rules.to_string());
        put("min_useful_steps", self.synth.min_useful_steps.to_string());
        put("max_attempts", self.inj.max_attempts.to_string());
        put("allow_step_drop", self.inj.allow_step_drop.to_string());
        match self.inj.k_range {
            KRange::Interior => put("k_range", "interior".into()),
            KRange::Explicit { min, max } => put("k_range", format!("{min}..={max}")),
        }
        for (t, w) in &self.synth.template_weights {
            put(&format!("template.{}", t.name()), w.to_string());
        }
        for (e, w) in self.inj.weights.iter() {
            put(&format!("weight.{}", e.name()), w.to_string());
        }
        s
    }

    pub fn digest(&self) -> String {
        digest(&self.effective())
    }
}
