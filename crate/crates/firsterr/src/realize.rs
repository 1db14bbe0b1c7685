//! Natural-language realization of symbolic instances and the leak lint.
//!
//! The templated engine is offline and deterministic. Both chains of an
//! instance share one name, background and predicate map, and every text
//! choice is a hash of the instance seed and the symbolic content being
//! rendered, so steps shared by the two chains render identically.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use firsterr_core::chain::Step;
use firsterr_core::inject::{ErrorType, Instance};
use firsterr_core::logic::{FactId, Literal, Rule, RuleTemplate};
use firsterr_core::rng::{splitmix64, stage_seed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::NlRecord;

/// `{n}` stands for the character's name.
const PREDICATES: &[(&str, &str, &str)] = &[
    ("keeps_bees", "{n} keeps bees", "{n} does not keep bees"),
    ("owns_kayak", "{n} owns a kayak", "{n} has no kayak"),
    ("plays_cello", "{n} plays the cello", "{n} never learned the cello"),
    ("bakes_bread", "{n} bakes bread on Sundays", "{n} skips baking on Sundays"),
    ("speaks_portuguese", "{n} speaks Portuguese", "{n} speaks no Portuguese"),
    ("rides_to_work", "{n} cycles to work", "{n} does not cycle to work"),
    ("grows_tomatoes", "{n} grows tomatoes on the balcony", "{n} has nothing growing on the balcony"),
    ("night_shift", "{n} works the night shift", "{n} works only daytime hours"),
    ("adopted_cat", "{n} adopted a cat last spring", "{n} did not adopt a cat last spring"),
    ("runs_marathons", "{n} trains for marathons", "{n} has stopped running long distances"),
    ("collects_stamps", "{n} collects old stamps", "{n} has no interest in stamps"),
    ("visits_grandmother", "{n} visits a grandmother every weekend", "{n} rarely visits family on weekends"),
    ("writes_poetry", "{n} writes poetry at night", "{n} does not write poetry"),
    ("fixes_bikes", "{n} repairs bicycles for neighbors", "{n} leaves bicycle repairs to the shop"),
    ("sings_choir", "{n} sings in the town choir", "{n} is not part of the town choir"),
    ("drinks_coffee", "{n} drinks black coffee each morning", "{n} has given up coffee"),
    ("studies_stars", "{n} watches the stars through a telescope", "{n} never looks through a telescope"),
    ("sails_weekends", "{n} goes sailing on weekends", "{n} stays ashore on weekends"),
    ("knits_scarves", "{n} knits scarves for friends", "{n} cannot knit"),
    ("volunteers_library", "{n} volunteers at the library", "{n} does not volunteer at the library"),
    ("finds_way_in_dark", "{n} can find the way home in the dark", "{n} gets lost in the dark"),
    ("hikes_mountains", "{n} hikes in the mountains", "{n} avoids mountain trails"),
    ("paints_murals", "{n} paints murals downtown", "{n} has never painted a mural"),
    ("keeps_journal", "{n} keeps a daily journal", "{n} keeps no journal"),
    ("cooks_curry", "{n} cooks curry for the neighbors", "{n} does not cook for the neighbors"),
    ("plays_chess", "{n} plays chess in the park", "{n} has no time for chess"),
    ("teaches_swimming", "{n} teaches swimming to children", "{n} does not teach swimming"),
    ("fears_heights", "{n} is afraid of heights", "{n} is comfortable at great heights"),
    ("owns_food_truck", "{n} runs a food truck", "{n} has never run a food truck"),
    ("birdwatching", "{n} spends mornings watching birds", "{n} pays little attention to birds"),
    ("builds_furniture", "{n} builds furniture by hand", "{n} buys all furniture ready-made"),
    ("reads_mysteries", "{n} reads a mystery novel every week", "{n} does not read mystery novels"),
    ("dances_tango", "{n} dances tango on Fridays", "{n} does not dance tango"),
    ("rescues_dogs", "{n} fosters rescue dogs", "{n} does not foster dogs"),
    ("brews_cider", "{n} brews cider in the garage", "{n} has never brewed cider"),
    ("climbs_rock", "{n} climbs at the rock gym", "{n} does not go climbing"),
    ("restores_radios", "{n} restores antique radios", "{n} leaves old radios alone"),
    ("fishes_river", "{n} fishes in the river at dawn", "{n} does not fish in the river"),
    ("moved_abroad", "{n} moved abroad as a teenager", "{n} has always lived in the same country"),
    ("plays_drums", "{n} plays drums in a band", "{n} does not play in a band"),
    ("photographs_bridges", "{n} photographs old bridges", "{n} takes no interest in bridges"),
    ("skates_ice", "{n} skates on the frozen lake", "{n} stays off the ice"),
];

const NAMES: &[&str] = &[
    "Ada", "Bruno", "Chiara", "Dmitri", "Esther", "Farid", "Greta", "Hugo", "Imani", "Jonas", "Keiko", "Lukas",
    "Mateo", "Nadia", "Oskar", "Priya", "Quentin", "Rosa", "Soren", "Talia",
];

const BACKGROUNDS: &[&str] = &[
    "{n} lives in a small harbor town and works at the ferry office.",
    "{n} recently moved to the city to study architecture.",
    "{n} runs a bookshop on a quiet street and knows most customers by name.",
    "{n} grew up on a farm and now teaches at the local school.",
    "{n} is a nurse who spends free days outdoors.",
    "{n} works from home as a translator and likes routines.",
    "{n} retired early and fills the days with hobbies.",
    "{n} shares an apartment with two friends near the river.",
];

/// `{a}`, `{b}`, `{c}` are the rule's atoms in textual order.
fn rule_frames(t: RuleTemplate) -> &'static [&'static str] {
    match t {
        RuleTemplate::Impl => &[
            "If {a}, then {b}.",
            "Whenever {a}, {b}.",
            "{A} means that {b}.",
            "When {a}, it follows that {b}.",
            "{A} only if {b}.",
            "Any time {a}, {b} as well.",
        ],
        RuleTemplate::AndAnte => &[
            "If {a} and {b}, then {c}.",
            "Whenever {a} and also {b}, {c}.",
            "When both {a} and {b}, it follows that {c}.",
            "{A} together with {b} means that {c}.",
            "In case {a} and {b}, {c}.",
            "Once {a} and {b}, {c}.",
        ],
        RuleTemplate::AndCons => &[
            "If {a}, then {b} and {c}.",
            "Whenever {a}, both {b} and {c}.",
            "{A} means that {b} and that {c}.",
            "When {a}, it follows that {b} and {c}.",
            "Any time {a}, {b}, and {c} too.",
            "Once {a}, {b} as well as {c}.",
        ],
        RuleTemplate::OrAnte => &[
            "If {a} or {b}, then {c}.",
            "Whenever {a} or {b}, {c}.",
            "Either {a} or {b}, and in both cases {c}.",
            "When at least one holds, that {a} or that {b}, {c}.",
            "In case {a} or {b}, it follows that {c}.",
            "Once {a} or {b}, {c}.",
        ],
        RuleTemplate::OrCons => &[
            "If {a}, then {b} or {c}.",
            "Whenever {a}, at least one holds: {b}, or {c}.",
            "{A} means that {b} or that {c}.",
            "When {a}, either {b} or {c}.",
            "Any time {a}, {b} or else {c}.",
            "Once {a}, {b} or {c}, possibly both.",
        ],
        RuleTemplate::XorAnte => &[
            "If exactly one of these holds, that {a} or that {b}, then {c}.",
            "Whenever {a} or {b} but not both, {c}.",
            "When just one is true, {a} or {b}, it follows that {c}.",
            "{A} or {b}, but never both together, means that {c}.",
            "In case only one of {a} and {b} holds, {c}.",
            "Should one but not both hold, {a} or {b}, then {c}.",
        ],
        RuleTemplate::XorBare => &[
            "Exactly one of these is true: {a}, or {b}.",
            "Either {a} or {b}, but not both.",
            "{A} or {b}, and never the two together.",
            "Just one holds: {a}, or else {b}.",
            "Only one is the case, that {a} or that {b}.",
            "One of the two holds and the other does not: {a}; {b}.",
        ],
    }
}

/// `{s}` is the joined supports, `{c}` the conclusion.
const STEP_FRAMES: &[&str] = &[
    "Since {s}, {c}.",
    "Because {s}, {c}.",
    "Given that {s}, {c}.",
    "{S}. So {c}.",
    "{S}, which means {c}.",
    "{S}; hence {c}.",
];

const BARE_STEP_FRAMES: &[&str] = &["{C}.", "It turns out that {c}."];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NlMode {
    /// Text fit for judge input.
    #[default]
    Clean,
    /// Clean text plus an annotation of the corruption on step k.
    Annotated,
}

impl NlMode {
    pub fn name(self) -> &'static str {
        match self {
            NlMode::Clean => "clean",
            NlMode::Annotated => "annotated",
        }
    }
}

impl fmt::Display for NlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NlMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clean" => Ok(NlMode::Clean),
            "annotated" => Ok(NlMode::Annotated),
            _ => Err(Error::Config(format!("unknown nl mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateEntry {
    pub predicate: String,
    #[serde(rename = "true")]
    pub positive: String,
    #[serde(rename = "false")]
    pub negative: String,
}

/// Sentence per fact and polarity, shared by both chains.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredicateMap(pub BTreeMap<FactId, PredicateEntry>);

impl PredicateMap {
    /// Checks coverage of `facts`, non-empty sentences and distinct
    /// predicate names.
    pub fn validate(&self, facts: &BTreeSet<FactId>) -> Result<()> {
        for f in facts {
            if !self.0.contains_key(f) {
                return Err(Error::Translator(format!("mapping misses {f}")));
            }
        }
        let mut seen = BTreeSet::new();
        for (f, e) in &self.0 {
            if e.predicate.trim().is_empty() || e.positive.trim().is_empty() || e.negative.trim().is_empty() {
                return Err(Error::Translator(format!("mapping for {f} has an empty field")));
            }
            if !seen.insert(e.predicate.as_str()) {
                return Err(Error::Translator(format!("predicate `{}` is used twice", e.predicate)));
            }
        }
        Ok(())
    }

    /// Sentence without final punctuation.
    pub fn clause(&self, lit: Literal) -> &str {
        let e = &self.0[&lit.fact];
        let s = if lit.value { &e.positive } else { &e.negative };
        s.trim_end_matches(['.', '!'])
    }

    pub fn sentence(&self, lit: Literal) -> String {
        format!("{}.", self.clause(lit))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextProfile {
    pub name: String,
    pub background: String,
}

fn pick(seed: u64, key: &str, n: usize) -> usize {
    (stage_seed(seed, key) % n as u64) as usize
}

pub fn templated_context(seed: u64) -> ContextProfile {
    let name = NAMES[pick(seed, "name", NAMES.len())];
    let background = BACKGROUNDS[pick(seed, "background", BACKGROUNDS.len())].replace("{n}", name);
    ContextProfile { name: name.to_string(), background }
}

/// Every fact the instance mentions.
pub fn instance_facts(inst: &Instance) -> BTreeSet<FactId> {
    let mut facts = inst.correct.facts();
    for s in &inst.erroneous.steps {
        facts.extend(s.facts());
    }
    facts
}

/// Draws distinct lexicon frames for the instance's facts.
pub fn templated_map(inst: &Instance, ctx: &ContextProfile, seed: u64) -> Result<PredicateMap> {
    let facts = instance_facts(inst);
    if facts.len() > PREDICATES.len() {
        return Err(Error::Config(format!("{} facts exceed the {}-entry lexicon", facts.len(), PREDICATES.len())));
    }
    // Seeded Fisher-Yates over the lexicon indices.
    let mut idx: Vec<usize> = (0..PREDICATES.len()).collect();
    let mut h = stage_seed(seed, "predicates");
    for i in (1..idx.len()).rev() {
        h = splitmix64(h);
        idx.swap(i, (h % (i as u64 + 1)) as usize);
    }
    let map = facts
        .iter()
        .zip(idx)
        .map(|(f, i)| {
            let (p, pos, neg) = PREDICATES[i];
            let fill = |s: &str| format!("{}.", s.replace("{n}", &ctx.name));
            (*f, PredicateEntry { predicate: p.to_string(), positive: fill(pos), negative: fill(neg) })
        })
        .collect();
    Ok(PredicateMap(map))
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn fill(frame: &str, slots: &[(&str, &str)]) -> String {
    let mut out = frame.to_string();
    for (k, v) in slots {
        out = out.replace(&format!("{{{}}}", k.to_uppercase()), &capitalize(v));
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

pub fn render_rule(rule: &Rule, map: &PredicateMap, seed: u64) -> String {
    let frames = rule_frames(rule.template());
    let frame = frames[pick(seed, &format!("rule {rule}"), frames.len())];
    let clauses: Vec<&str> = rule.slots().iter().map(|f| map.clause(Literal::new(*f, true))).collect();
    let keys = ["a", "b", "c"];
    let slots: Vec<(&str, &str)> = keys.iter().copied().zip(clauses.iter().copied()).collect();
    fill(frame, &slots)
}

fn join(parts: &[&str]) -> String {
    match parts {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

pub fn render_step(step: &Step, map: &PredicateMap, seed: u64) -> String {
    let supports: Vec<&str> = step.supports.iter().map(|l| map.clause(*l)).collect();
    let c = map.clause(step.conclusion);
    let key = format!("step {step}");
    if supports.is_empty() {
        let frame = BARE_STEP_FRAMES[pick(seed, &key, BARE_STEP_FRAMES.len())];
        return fill(frame, &[("c", c)]);
    }
    let frame = STEP_FRAMES[pick(seed, &key, STEP_FRAMES.len())];
    let s = join(&supports);
    fill(frame, &[("s", &s), ("c", c)])
}

pub fn render_goal(goal: Literal, map: &PredicateMap) -> String {
    format!("Determine whether {}.", map.clause(goal))
}

fn annotation(e: ErrorType, k: usize) -> String {
    let what = match e {
        ErrorType::DropCondition => "a condition of the rule is ignored",
        ErrorType::ImplicationMisuse => "the implication is applied in a way it does not license",
        ErrorType::OrAndConfusion => "a disjunction and a conjunction are confused",
        ErrorType::PartialEvaluation => "the rule is applied before all its conditions are known",
        ErrorType::XorAsOr => "an exclusive or is treated as an inclusive or",
        ErrorType::XorAsEquiv => "an exclusive or is treated as an equivalence",
        ErrorType::VacuousTruthError => "a vacuously true implication is treated as forcing its consequent",
        ErrorType::ConverseError => "the implication is used in the converse direction",
        ErrorType::RedundantStep => "an earlier step is repeated without new content",
        ErrorType::MissingPrerequisite => "a fact used here is never derived beforehand",
        ErrorType::CircularReference => "the step uses a fact that is only derived later",
    };
    format!("Annotation for step {k} ({}): {what}; this is the first invalid step.", e.name())
}

/// Realizes both chains under one context and predicate map.
pub fn realize_instance(inst: &Instance, ctx: &ContextProfile, map: &PredicateMap, nl_mode: NlMode, seed: u64) -> NlRecord {
    let c = &inst.correct;
    let correct_steps: Vec<String> = c.steps.iter().map(|s| render_step(s, map, seed)).collect();
    let mut erroneous_steps: Vec<String> = inst.erroneous.steps.iter().map(|s| render_step(s, map, seed)).collect();
    let k = inst.k();
    let note = (nl_mode == NlMode::Annotated).then(|| annotation(inst.error_type(), k));
    if let Some(n) = &note {
        erroneous_steps[k - 1] = format!("{} {n}", erroneous_steps[k - 1]);
    }
    NlRecord {
        mode: "templated".into(),
        nl_mode: nl_mode.name().into(),
        name: ctx.name.clone(),
        background: ctx.background.clone(),
        goal: render_goal(c.goal, map),
        base_facts: c.base_facts.iter().map(|l| map.sentence(*l)).collect(),
        rules: c.rules.iter().map(|r| render_rule(r, map, seed)).collect(),
        correct_steps,
        erroneous_steps,
        annotation: note,
    }
}

/// Templated realization with context and map drawn from `seed`.
pub fn realize_templated(inst: &Instance, nl_mode: NlMode, seed: u64) -> Result<NlRecord> {
    let ctx = templated_context(seed);
    let map = templated_map(inst, &ctx, seed)?;
    Ok(realize_instance(inst, &ctx, &map, nl_mode, seed))
}

/// Words that give away a step's label.
pub const FORBIDDEN_WORDS: &[&str] = &[
    "error", "mistake", "wrong", "invalid", "unsupported", "evidence", "established", "assumes", "depends", "relies",
    "repeats", "restates",
];

pub const META_PHRASES: &[&str] = &["the rule says", "according to the rule", "this step", "the conclusion"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based step in the erroneous chain.
    pub step: usize,
    pub term: String,
}

/// Case-insensitive whole-word occurrences of `term` in `text`.
pub fn find_term(text: &str, term: &str) -> usize {
    let hay = text.to_lowercase();
    let needle = term.to_lowercase();
    let word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
    let mut n = 0;
    for (i, _) in hay.match_indices(&needle) {
        let before = hay[..i].chars().next_back();
        let after = hay[i + needle.len()..].chars().next();
        if !word(before) && !word(after) {
            n += 1;
        }
    }
    n
}

/// Label-leaking terms in erroneous-chain steps `k..`.
pub fn leak_lint(nl: &NlRecord, k: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, text) in nl.erroneous_steps.iter().enumerate().skip(k.saturating_sub(1)) {
        for term in FORBIDDEN_WORDS.iter().chain(META_PHRASES) {
            for _ in 0..find_term(text, term) {
                out.push(Violation { step: i + 1, term: term.to_string() });
            }
        }
    }
    out
}
