//! External translation behind a narrow client interface.
//!
//! Requests are role-tagged prompt bundles, one per stage. Tests and
//! offline runs use [`ReplayTranslator`], which answers from a transcript
//! file; [`Recorder`] wraps any client and captures such a transcript. The
//! HTTP client (feature `http`) reads its endpoint and credentials from the
//! environment only.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use firsterr_core::chain::Step;
use firsterr_core::inject::Instance;
use firsterr_core::logic::{FactId, Literal, Rule};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::realize::{instance_facts, leak_lint, render_goal, ContextProfile, NlMode, PredicateEntry, PredicateMap};
use crate::record::NlRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSection {
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub stage: String,
    pub sections: Vec<PromptSection>,
}

impl PromptBundle {
    fn new(stage: &str, system: String, user: String) -> Self {
        PromptBundle {
            stage: stage.into(),
            sections: vec![PromptSection { role: Role::System, text: system }, PromptSection { role: Role::User, text: user }],
        }
    }

    fn key(&self) -> String {
        serde_json::to_string(self).expect("bundles serialize")
    }
}

pub trait TranslatorClient: Send + Sync {
    fn send(&self, bundle: &PromptBundle) -> Result<String>;
}

impl<T: TranslatorClient + ?Sized> TranslatorClient for Box<T> {
    fn send(&self, bundle: &PromptBundle) -> Result<String> {
        (**self).send(bundle)
    }
}

pub fn background_prompt(name: &str) -> PromptBundle {
    PromptBundle::new(
        "background",
        "Write a short, plain background story about a person that gives context for reasoning about their habits \
         and circumstances. Reply with the story only."
            .into(),
        format!("Name: {name}"),
    )
}

pub fn mapping_prompt(ctx: &ContextProfile, facts: &BTreeSet<FactId>) -> PromptBundle {
    let syms: Vec<String> = facts.iter().map(ToString::to_string).collect();
    PromptBundle::new(
        "mapping",
        "Give every fact symbol an English predicate that suits the person. Reply with one JSON object keyed by \
         symbol; each value has the fields `predicate`, `true` (a sentence for the true value) and `false` (a \
         sentence for the false value). Predicates must be distinct, sentences varied, negations natural. Reply \
         with JSON only."
            .into(),
        format!("Background: {}\nName: {}\nFact symbols: {}", ctx.background, ctx.name, syms.join(", ")),
    )
}

fn mapping_json(map: &PredicateMap) -> String {
    let obj: serde_json::Map<String, serde_json::Value> =
        map.0.iter().map(|(f, e)| (f.to_string(), serde_json::to_value(e).expect("entry"))).collect();
    serde_json::Value::Object(obj).to_string()
}

pub fn rule_prompt(rule: &Rule, ctx: &ContextProfile, map: &PredicateMap) -> PromptBundle {
    PromptBundle::new(
        "rule",
        "Restate the logical rule in conversational English using the predicate mapping, varying the phrasing. \
         Implications may read as consequences, conjunctions say both parts hold, disjunctions say at least one \
         holds, and an exclusive or says exactly one side holds. `[[F]]` means the same as `[F]`. Reply with the \
         sentence only."
            .into(),
        format!("Rule: {rule}\nPredicate mapping: {}\nName: {}", mapping_json(map), ctx.name),
    )
}

pub fn step_prompt(step: &Step, ctx: &ContextProfile, map: &PredicateMap, rule_nl: &str, status: Option<&str>, nl_mode: NlMode) -> PromptBundle {
    let facts: Vec<String> = step.supports.iter().map(|l| map.sentence(*l)).collect();
    let mut user = format!(
        "Background: {}\nName: {}\nFacts: {}\nRule: {}\nConclusion: {}\nStep status: {}\nError type: {}",
        ctx.background,
        ctx.name,
        facts.join(" "),
        rule_nl,
        map.sentence(step.conclusion),
        if status.is_some() { "erroneous" } else { "correct" },
        status.unwrap_or("none"),
    );
    user.push_str(match nl_mode {
        NlMode::Clean => "\nOutput use: judge input. Keep the propositions, avoid words that reveal the status, and avoid commentary about steps or rules.",
        NlMode::Annotated => "\nOutput use: annotation. Describe the process problem plainly.",
    });
    PromptBundle::new(
        "step",
        "Turn the reasoning step into one or two short, natural sentences that keep every truth value. Reply \
         with the step text only."
            .into(),
        user,
    )
}

/// Parses and validates a mapping reply.
pub fn parse_mapping(reply: &str, facts: &BTreeSet<FactId>) -> Result<PredicateMap> {
    let raw: std::collections::BTreeMap<String, PredicateEntry> =
        serde_json::from_str(reply.trim()).map_err(|e| Error::Translator(format!("mapping is not valid JSON: {e}")))?;
    let mut map = PredicateMap::default();
    for (k, v) in raw {
        let f = firsterr_core::logic::parse_expr(&k)
            .ok()
            .and_then(|e| match e {
                firsterr_core::logic::Expr::Atom(f) => Some(f),
                _ => None,
            })
            .ok_or_else(|| Error::Translator(format!("`{k}` is not a fact symbol")))?;
        map.0.insert(f, v);
    }
    map.validate(facts)?;
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExternalOptions {
    pub nl_mode: NlMode,
    /// Extra attempts per request after a rejected reply.
    pub retries: usize,
}

impl Default for ExternalOptions {
    fn default() -> Self {
        ExternalOptions { nl_mode: NlMode::Clean, retries: 2 }
    }
}

fn with_retries<T>(retries: usize, mut f: impl FnMut() -> Result<T>) -> Result<T> {
    let mut last = None;
    for _ in 0..=retries {
        match f() {
            Ok(v) => return Ok(v),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Realizes an instance through `client`. Shared prefix steps are sent
/// once and reused, so both chains carry the same text for them. In clean
/// mode a step reply that trips the leak lint is retried, then rejected.
pub fn realize_external(inst: &Instance, name: &str, client: &dyn TranslatorClient, opts: ExternalOptions) -> Result<NlRecord> {
    let background = client.send(&background_prompt(name))?.trim().to_string();
    let ctx = ContextProfile { name: name.to_string(), background };
    let facts = instance_facts(inst);
    let mprompt = mapping_prompt(&ctx, &facts);
    let map = with_retries(opts.retries, || parse_mapping(&client.send(&mprompt)?, &facts))?;

    let mut rule_text = HashMap::new();
    for r in inst.correct.rules.iter().chain(inst.erroneous.steps.iter().map(|s| &s.rule)) {
        if !rule_text.contains_key(r) {
            let t = client.send(&rule_prompt(r, &ctx, &map))?.trim().to_string();
            rule_text.insert(r.clone(), t);
        }
    }

    let k = inst.k();
    let mut cache: HashMap<(Step, Option<&str>), String> = HashMap::new();
    let mut step_text = |s: &Step, status: Option<&'static str>| -> Result<String> {
        if let Some(t) = cache.get(&(s.clone(), status)) {
            return Ok(t.clone());
        }
        let p = step_prompt(s, &ctx, &map, &rule_text[&s.rule], status, opts.nl_mode);
        let t = with_retries(opts.retries, || {
            let t = client.send(&p)?.trim().to_string();
            if status.is_some() && opts.nl_mode == NlMode::Clean {
                let probe = NlRecord { erroneous_steps: vec![t.clone()], ..empty_nl() };
                if let Some(v) = leak_lint(&probe, 1).first() {
                    return Err(Error::Translator(format!("step text leaks `{}`", v.term)));
                }
            }
            Ok(t)
        })?;
        cache.insert((s.clone(), status), t.clone());
        Ok(t)
    };
    let correct_steps = inst.correct.steps.iter().map(|s| step_text(s, None)).collect::<Result<Vec<_>>>()?;
    let status = inst.error_type().name();
    let erroneous_steps = inst
        .erroneous
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| step_text(s, (i + 1 >= k).then_some(status)))
        .collect::<Result<Vec<_>>>()?;

    Ok(NlRecord {
        mode: "external".into(),
        nl_mode: opts.nl_mode.name().into(),
        name: ctx.name.clone(),
        background: ctx.background.clone(),
        goal: render_goal(inst.correct.goal, &map),
        base_facts: inst.correct.base_facts.iter().map(|l: &Literal| map.sentence(*l)).collect(),
        rules: inst.correct.rules.iter().map(|r| rule_text[r].clone()).collect(),
        correct_steps,
        erroneous_steps,
        annotation: None,
    })
}

fn empty_nl() -> NlRecord {
    NlRecord {
        mode: String::new(),
        nl_mode: String::new(),
        name: String::new(),
        background: String::new(),
        goal: String::new(),
        base_facts: Vec::new(),
        rules: Vec::new(),
        correct_steps: Vec::new(),
        erroneous_steps: Vec::new(),
        annotation: None,
    }
}

/// One request/response pair of a transcript file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request: PromptBundle,
    pub response: String,
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Malformed { line: i + 1, message: e.to_string() }))
        .collect()
}

pub fn write_transcript(path: &Path, entries: &[TranscriptEntry]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for e in entries {
        writeln!(f, "{}", serde_json::to_string(e).expect("entries serialize"))?;
    }
    f.flush()?;
    Ok(())
}

/// Answers each request with the next recorded response for exactly that
/// request; unknown requests are an error.
#[derive(Debug, Default)]
pub struct ReplayTranslator {
    queue: Mutex<HashMap<String, VecDeque<String>>>,
}

impl ReplayTranslator {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        let mut q: HashMap<String, VecDeque<String>> = HashMap::new();
        for e in entries {
            q.entry(e.request.key()).or_default().push_back(e.response);
        }
        ReplayTranslator { queue: Mutex::new(q) }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::new(read_transcript(path)?))
    }

    /// Responses not consumed yet.
    pub fn remaining(&self) -> usize {
        self.queue.lock().expect("replay lock").values().map(VecDeque::len).sum()
    }
}

impl TranslatorClient for ReplayTranslator {
    fn send(&self, bundle: &PromptBundle) -> Result<String> {
        self.queue
            .lock()
            .expect("replay lock")
            .get_mut(&bundle.key())
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| Error::Translator(format!("no recorded response for a `{}` request", bundle.stage)))
    }
}

/// Passes requests to `inner` and keeps every exchange.
pub struct Recorder<C> {
    inner: C,
    log: Mutex<Vec<TranscriptEntry>>,
}

impl<C: TranslatorClient> Recorder<C> {
    pub fn new(inner: C) -> Self {
        Recorder { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.log.lock().expect("recorder lock").clone()
    }
}

impl<C: TranslatorClient> TranslatorClient for Recorder<C> {
    fn send(&self, bundle: &PromptBundle) -> Result<String> {
        let response = self.inner.send(bundle)?;
        self.log.lock().expect("recorder lock").push(TranscriptEntry { request: bundle.clone(), response: response.clone() });
        Ok(response)
    }
}

pub const ENV_URL: &str = "FIRSTERR_TRANSLATOR_URL";
pub const ENV_API_KEY: &str = "FIRSTERR_TRANSLATOR_API_KEY";
pub const ENV_MODEL: &str = "FIRSTERR_TRANSLATOR_MODEL";
pub const ENV_TIMEOUT: &str = "FIRSTERR_TRANSLATOR_TIMEOUT_SECS";
pub const ENV_RETRIES: &str = "FIRSTERR_TRANSLATOR_RETRIES";
pub const ENV_IN_FLIGHT: &str = "FIRSTERR_TRANSLATOR_MAX_IN_FLIGHT";

/// Endpoint settings. Read from the environment only.
#[derive(Clone, PartialEq, Eq)]
pub struct HttpSettings {
    pub url: String,
    pub api_key: String,
    pub model: String,
    pub timeout_secs: u64,
    pub retries: usize,
    pub max_in_flight: usize,
}

impl std::fmt::Debug for HttpSettings {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpSettings")
            .field("url", &self.url)
            .field("api_key", &"<redacted>")
            .field("model", &self.model)
            .field("timeout_secs", &self.timeout_secs)
            .field("retries", &self.retries)
            .field("max_in_flight", &self.max_in_flight)
            .finish()
    }
}

impl HttpSettings {
    pub fn from_env() -> Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let need = |k: &str| get(k).filter(|v| !v.is_empty()).ok_or_else(|| Error::Config(format!("{k} is not set")));
        let num = |k: &str, d: u64| -> Result<u64> {
            get(k).map_or(Ok(d), |v| v.parse().map_err(|_| Error::Config(format!("{k} must be a number"))))
        };
        Ok(HttpSettings {
            url: need(ENV_URL)?,
            api_key: need(ENV_API_KEY)?,
            model: need(ENV_MODEL)?,
            timeout_secs: num(ENV_TIMEOUT, 60)?,
            retries: num(ENV_RETRIES, 2)? as usize,
            max_in_flight: num(ENV_IN_FLIGHT, 4)?.max(1) as usize,
        })
    }
}

#[cfg(feature = "http")]
pub use http::HttpTranslator;

#[cfg(feature = "http")]
mod http {
    use std::sync::{Condvar, Mutex};
    use std::time::Duration;

    use super::{HttpSettings, PromptBundle, Role, TranslatorClient};
    use crate::error::{Error, Result};

    /// Chat-completions style client with a cap on concurrent requests.
    pub struct HttpTranslator {
        settings: HttpSettings,
        agent: ureq::Agent,
        in_flight: Mutex<usize>,
        freed: Condvar,
    }

    impl HttpTranslator {
        pub fn new(settings: HttpSettings) -> Self {
            let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(settings.timeout_secs)).build();
            HttpTranslator { settings, agent, in_flight: Mutex::new(0), freed: Condvar::new() }
        }

        fn post(&self, bundle: &PromptBundle) -> Result<String> {
            let messages: Vec<serde_json::Value> = bundle
                .sections
                .iter()
                .map(|s| {
                    let role = match s.role {
                        Role::System => "system",
                        Role::User => "user",
                    };
                    serde_json::json!({ "role": role, "content": s.text })
                })
                .collect();
            let body = serde_json::json!({ "model": self.settings.model, "messages": messages });
            let resp: serde_json::Value = self
                .agent
                .post(&self.settings.url)
                .set("Authorization", &format!("Bearer {}", self.settings.api_key))
                .send_json(body)
                .map_err(|e| Error::Translator(e.to_string()))?
                .into_json()
                .map_err(|e| Error::Translator(e.to_string()))?;
            resp["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::Translator("reply has no message content".into()))
        }
    }

    impl TranslatorClient for HttpTranslator {
        fn send(&self, bundle: &PromptBundle) -> Result<String> {
            {
                let mut n = self.in_flight.lock().expect("in-flight lock");
                while *n >= self.settings.max_in_flight {
                    n = self.freed.wait(n).expect("in-flight lock");
                }
                *n += 1;
            }
            let mut out = self.post(bundle);
            for _ in 0..self.settings.retries {
                if out.is_ok() {
                    break;
                }
                out = self.post(bundle);
            }
            *self.in_flight.lock().expect("in-flight lock") -= 1;
            self.freed.notify_one();
            out
        }
    }
}

/// The configured external client, if this build has one.
pub fn client_from_env() -> Result<Box<dyn TranslatorClient>> {
    #[cfg(feature = "http")]
    {
        Ok(Box::new(HttpTranslator::new(HttpSettings::from_env()?)))
    }
    #[cfg(not(feature = "http"))]
    {
        HttpSettings::from_env()?;
        Err(Error::Config("built without the `http` feature; use a transcript for external mode".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_need_every_variable() {
        let env = |k: &str| match k {
            ENV_URL => Some("http://localhost:1".to_string()),
            ENV_API_KEY => Some("k".to_string()),
            ENV_MODEL => Some("m".to_string()),
            _ => None,
        };
        let s = HttpSettings::from_lookup(env).unwrap();
        assert_eq!((s.timeout_secs, s.retries, s.max_in_flight), (60, 2, 4));
        assert!(!format!("{s:?}").contains("\"k\""));
        assert!(HttpSettings::from_lookup(|k| if k == ENV_MODEL { None } else { env(k) }).is_err());
    }

    #[test]
    fn replay_is_strict() {
        let p = background_prompt("Ada");
        let r = ReplayTranslator::new(vec![TranscriptEntry { request: p.clone(), response: "story".into() }]);
        assert_eq!(r.send(&p).unwrap(), "story");
        assert!(r.send(&p).is_err());
        assert!(r.send(&background_prompt("Bruno")).is_err());
    }
}
