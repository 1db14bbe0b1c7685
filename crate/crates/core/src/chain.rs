//! Correct chain synthesis by backward goal expansion, plus verification.
//!
//! Synthesis keeps a hidden world assignment. Every rule it creates holds
//! under the world, so the theory is consistent and every derived literal
//! agrees with the world. Starting from the goal literal, an open subgoal is
//! picked, a template and a licensed pattern deriving that literal are
//! chosen, and the pattern's premises become new subgoals. Subgoals left
//! open when the step budget is spent become base facts.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::logic::{FactId, Literal, Rule, RuleTemplate, State, TruthValue};
use crate::prover::{entails, patterns_for, InferencePattern, PrefixWalker, StepAssessment, Theory};
use crate::rng::{rng_from_seed, Rng};

/// One reasoning step: supporting literals, the applied rule and the
/// conclusion. Positions are implicit (1-based index in the chain).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub supports: Vec<Literal>,
    pub rule: Rule,
    pub conclusion: Literal,
}

impl Step {
    pub fn new(supports: Vec<Literal>, rule: Rule, conclusion: Literal) -> Self {
        Step { supports, rule, conclusion }
    }

    /// Facts of the supports and the conclusion.
    pub fn facts(&self) -> impl Iterator<Item = FactId> + '_ {
        self.supports.iter().map(|l| l.fact).chain(core::iter::once(self.conclusion.fact))
    }

    pub fn cites(&self, lit: Literal) -> bool {
        self.supports.contains(&lit)
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}; facts ", self.rule)?;
        for (i, s) in self.supports.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "; conclusion {}", self.conclusion)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectChain {
    pub base_facts: Vec<Literal>,
    pub rules: Vec<Rule>,
    pub steps: Vec<Step>,
    pub goal: Literal,
}

impl CorrectChain {
    /// Theory over the chain's rules and every fact it mentions.
    pub fn theory(&self) -> Result<Theory> {
        Theory::with_facts(self.rules.clone(), self.facts())
    }

    pub fn facts(&self) -> BTreeSet<FactId> {
        let mut out: BTreeSet<FactId> = self.base_facts.iter().map(|l| l.fact).collect();
        out.insert(self.goal.fact);
        for r in &self.rules {
            out.extend(r.slots().iter().copied());
        }
        for s in &self.steps {
            out.extend(s.facts());
        }
        out
    }

    /// Base facts plus the conclusions of steps `1..t` (1-based `t`).
    pub fn prefix_state(&self, t: usize) -> Result<State> {
        prefix_state(&self.base_facts, &self.steps[..t.saturating_sub(1).min(self.steps.len())])
    }
}

/// Base facts plus the conclusions of `steps`, written in order; a later
/// conclusion replaces an earlier value of the same fact.
pub fn prefix_state(base_facts: &[Literal], steps: &[Step]) -> Result<State> {
    let mut s = State::from_literals(base_facts)?;
    for st in steps {
        s.overwrite(st.conclusion);
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    pub min_steps: usize,
    pub max_steps: usize,
    pub max_facts: usize,
    pub max_attempts: usize,
    pub p_fresh: f64,
    pub distractor_rules: usize,
    pub min_useful_steps: usize,
    pub template_weights: BTreeMap<RuleTemplate, f64>,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            min_steps: 7,
            max_steps: 10,
            max_facts: 16,
            max_attempts: 200,
            p_fresh: 0.7,
            distractor_rules: 0,
            min_useful_steps: 2,
            template_weights: RuleTemplate::ALL.iter().map(|t| (*t, 1.0)).collect(),
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.min_steps < 3 || self.max_steps > 12 || self.min_steps > self.max_steps {
            return bad(format!("step range {}..={} must lie within 3..=12", self.min_steps, self.max_steps));
        }
        if self.max_facts < 3 || self.max_facts > Theory::DEFAULT_CAP {
            return bad(format!("max_facts {} must lie within 3..={}", self.max_facts, Theory::DEFAULT_CAP));
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p_fresh) {
            return bad(format!("p_fresh {} must lie within [0, 1]", self.p_fresh));
        }
        if self.template_weights.values().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("template weights must be finite and non-negative".into());
        }
        if !self.template_weights.values().any(|w| *w > 0.0) {
            return bad("template pool is empty".into());
        }
        if self.min_useful_steps == 0 {
            return bad("min_useful_steps must be at least 1".into());
        }
        Ok(())
    }

    /// Copy with the step range replaced.
    pub fn with_steps(&self, min_steps: usize, max_steps: usize) -> Self {
        SynthesisConfig { min_steps, max_steps, ..self.clone() }
    }
}

/// A synthesized chain and the number of attempts it took.
#[derive(Debug, Clone)]
pub struct Synthesized {
    pub chain: CorrectChain,
    pub attempts: usize,
    pub distractor_rules: usize,
}

/// Synthesizes a verified correct chain, deterministic in `(cfg, seed)`.
pub fn synthesize_chain(cfg: &SynthesisConfig, seed: u64) -> Result<CorrectChain> {
    synthesize_chain_counted(cfg, seed).map(|s| s.chain)
}

pub fn synthesize_chain_counted(cfg: &SynthesisConfig, seed: u64) -> Result<Synthesized> {
    cfg.validate()?;
    let mut rng = rng_from_seed(seed);
    for attempt in 1..=cfg.max_attempts {
        let Some(chain) = Builder::new(cfg, &mut rng).build() else { continue };
        if !is_nontrivial(&chain, cfg.min_useful_steps)? {
            continue;
        }
        if !verify_chain(&chain).is_valid() {
            continue;
        }
        return Ok(Synthesized { chain, attempts: attempt, distractor_rules: cfg.distractor_rules });
    }
    Err(Error::SynthesisExhausted { attempts: cfg.max_attempts })
}

/// The goal must not follow from the base facts under any set of fewer than
/// `min_useful` rules. Only sizes 0 and 1 are checked exhaustively; larger
/// thresholds additionally require that many steps in the chain.
pub fn is_nontrivial(c: &CorrectChain, min_useful: usize) -> Result<bool> {
    if c.steps.len() < min_useful {
        return Ok(false);
    }
    let base = State::from_literals(&c.base_facts)?;
    if base.value(c.goal.fact).is_some() {
        return Ok(false);
    }
    if min_useful >= 2 {
        for r in &c.rules {
            let th = Theory::with_facts(alloc::vec![r.clone()], c.facts())?;
            if entails(&th, &base, c.goal)?.is_entailed() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    /// Mentioned only as a free slot of some rule.
    Free,
    Open,
    Leaf,
    Derived,
}

struct Derivation {
    rule: Rule,
    premises: Vec<Literal>,
    conclusion: Literal,
}

struct Builder<'a> {
    cfg: &'a SynthesisConfig,
    rng: &'a mut Rng,
    world: BTreeMap<FactId, bool>,
    status: BTreeMap<FactId, Status>,
    /// Derived fact -> facts it was derived from.
    deps: BTreeMap<FactId, Vec<FactId>>,
    derivations: Vec<Derivation>,
    rules: Vec<Rule>,
    templates: Vec<RuleTemplate>,
    weights: WeightedIndex<f64>,
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a SynthesisConfig, rng: &'a mut Rng) -> Self {
        let (templates, ws): (Vec<RuleTemplate>, Vec<f64>) =
            cfg.template_weights.iter().filter(|(_, w)| **w > 0.0).map(|(t, w)| (*t, *w)).unzip();
        let weights = WeightedIndex::new(ws).expect("validated template weights");
        Builder {
            cfg,
            rng,
            world: BTreeMap::new(),
            status: BTreeMap::new(),
            deps: BTreeMap::new(),
            derivations: Vec::new(),
            rules: Vec::new(),
            templates,
            weights,
        }
    }

    fn fresh(&mut self, value: bool) -> Option<FactId> {
        if self.world.len() >= self.cfg.max_facts {
            return None;
        }
        let f = FactId(self.world.len() as u32);
        self.world.insert(f, value);
        self.status.insert(f, Status::Free);
        Some(f)
    }

    /// Whether `from` reaches `to` through derivation edges.
    fn reaches(&self, from: FactId, to: FactId) -> bool {
        let mut stack = alloc::vec![from];
        let mut seen = BTreeSet::new();
        while let Some(f) = stack.pop() {
            if f == to {
                return true;
            }
            if seen.insert(f) {
                if let Some(ds) = self.deps.get(&f) {
                    stack.extend(ds.iter().copied());
                }
            }
        }
        false
    }

    fn build(mut self) -> Option<CorrectChain> {
        let target = self.rng.gen_range(self.cfg.min_steps..=self.cfg.max_steps);
        let value = self.rng.gen_bool(0.5);
        let goal = Literal::new(self.fresh(value)?, value);
        self.status.insert(goal.fact, Status::Open);

        while self.derivations.len() < target {
            let open: Vec<FactId> = self.status.iter().filter(|(_, s)| **s == Status::Open).map(|(f, _)| *f).collect();
            let &fact = open.choose(self.rng)?;
            let lit = Literal::new(fact, self.world[&fact]);
            if !self.expand(lit) {
                self.status.insert(fact, Status::Leaf);
            }
        }

        let mut base_facts: Vec<Literal> = self
            .status
            .iter()
            .filter(|(_, s)| matches!(s, Status::Open | Status::Leaf))
            .map(|(f, _)| Literal::new(*f, self.world[f]))
            .collect();
        base_facts.sort();

        let order = self.forward_order(goal.fact)?;
        let steps: Vec<Step> = order
            .into_iter()
            .map(|i| {
                let d = &self.derivations[i];
                Step::new(d.premises.clone(), d.rule.clone(), d.conclusion)
            })
            .collect();

        for _ in 0..self.cfg.distractor_rules {
            self.distractor()?;
        }
        let mut rules = self.rules.clone();
        rules.shuffle(self.rng);
        Some(CorrectChain { base_facts, rules, steps, goal })
    }

    /// Tries a few templates to derive `lit`; returns whether a step was added.
    fn expand(&mut self, lit: Literal) -> bool {
        for _ in 0..8 {
            let template = self.templates[self.weights.sample(self.rng)];
            let candidates: Vec<&'static InferencePattern> =
                patterns_for(template).iter().filter(|p| p.derived.1 == lit.value).collect();
            let Some(&pattern) = candidates.choose(self.rng) else { continue };
            if self.instantiate(pattern, lit) {
                return true;
            }
        }
        false
    }

    fn instantiate(&mut self, p: &InferencePattern, lit: Literal) -> bool {
        let arity = p.template.arity();
        let mut slots: [Option<FactId>; 3] = [None; 3];
        slots[p.derived.0] = Some(lit.fact);
        let mut created: Vec<FactId> = Vec::new();

        let ok = 'fill: {
            for &(slot, value) in p.premises {
                let Some(f) = self.pick_premise(value, lit.fact, &slots, &mut created) else { break 'fill false };
                slots[slot] = Some(f);
            }
            for slot in 0..arity {
                if slots[slot].is_some() {
                    continue;
                }
                let Some(f) = self.pick_free(p, &slots, slot, &mut created) else { break 'fill false };
                slots[slot] = Some(f);
            }
            true
        };

        let facts: Vec<FactId> = slots[..arity].iter().filter_map(|s| *s).collect();
        let rule = if ok && facts.len() == arity { Rule::instantiate(p.template, &facts).ok() } else { None };
        let rule = rule.filter(|r| self.holds_in_world(r) && !self.rules.contains(r));
        let Some(rule) = rule else {
            self.rollback(&created);
            return false;
        };

        let premises = p.premise_literals(&rule);
        debug_assert!(premises.iter().all(|l| self.world[&l.fact] == l.value));
        for l in &premises {
            let st = self.status[&l.fact];
            if st == Status::Free {
                self.status.insert(l.fact, Status::Open);
            }
        }
        self.deps.insert(lit.fact, premises.iter().map(|l| l.fact).collect());
        self.status.insert(lit.fact, Status::Derived);
        self.rules.push(rule.clone());
        self.derivations.push(Derivation { rule, premises, conclusion: lit });
        true
    }

    fn rollback(&mut self, created: &[FactId]) {
        // Fresh facts are allocated densely, so undo them from the top.
        let mut c: Vec<FactId> = created.to_vec();
        c.sort();
        for f in c.into_iter().rev() {
            if f.0 as usize + 1 == self.world.len() {
                self.world.remove(&f);
                self.status.remove(&f);
            }
        }
    }

    /// A fact with world value `value` for a premise slot of a rule deriving
    /// `target`: fresh with probability `p_fresh`, otherwise reused.
    fn pick_premise(
        &mut self,
        value: bool,
        target: FactId,
        slots: &[Option<FactId>; 3],
        created: &mut Vec<FactId>,
    ) -> Option<FactId> {
        let want_fresh = self.rng.gen_bool(self.cfg.p_fresh);
        if want_fresh {
            if let Some(f) = self.fresh(value) {
                created.push(f);
                return Some(f);
            }
        }
        let used: Vec<FactId> = slots.iter().filter_map(|s| *s).collect();
        let reusable: Vec<FactId> = self
            .world
            .iter()
            .filter(|(f, v)| **v == value && !used.contains(f) && !self.reaches(**f, target))
            .map(|(f, _)| *f)
            .collect();
        if let Some(f) = reusable.choose(self.rng) {
            return Some(*f);
        }
        if want_fresh {
            return None;
        }
        let f = self.fresh(value)?;
        created.push(f);
        Some(f)
    }

    /// A fact for a slot outside the pattern, with a value that keeps the
    /// rule true under the world.
    fn pick_free(
        &mut self,
        p: &InferencePattern,
        slots: &[Option<FactId>; 3],
        slot: usize,
        created: &mut Vec<FactId>,
    ) -> Option<FactId> {
        let arity = p.template.arity();
        let mut allowed = Vec::new();
        for v in [false, true] {
            let mut facts = [FactId(0); 3];
            let mut s = State::new();
            for i in 0..arity {
                let f = FactId(1000 + i as u32);
                facts[i] = f;
                let val = if i == slot { v } else { self.world[&slots[i].expect("other slots filled")] };
                s.overwrite(Literal::new(f, val));
            }
            let r = Rule::instantiate(p.template, &facts[..arity]).ok()?;
            if r.eval(&s) == TruthValue::True {
                allowed.push(v);
            }
        }
        let &value = allowed.choose(self.rng)?;
        if self.rng.gen_bool(self.cfg.p_fresh) {
            if let Some(f) = self.fresh(value) {
                created.push(f);
                return Some(f);
            }
        }
        let used: Vec<FactId> = slots.iter().filter_map(|s| *s).collect();
        let reusable: Vec<FactId> = self
            .world
            .iter()
            .filter(|(f, v)| allowed.contains(v) && !used.contains(f))
            .map(|(f, _)| *f)
            .collect();
        if let Some(f) = reusable.choose(self.rng) {
            return Some(*f);
        }
        let f = self.fresh(value)?;
        created.push(f);
        Some(f)
    }

    fn holds_in_world(&self, r: &Rule) -> bool {
        let mut s = State::new();
        for f in r.slots() {
            s.overwrite(Literal::new(*f, self.world[f]));
        }
        r.eval(&s) == TruthValue::True
    }

    /// Kahn's algorithm over the derivations with seeded tie-breaks. The
    /// goal derivation is always last because every other one feeds it.
    fn forward_order(&mut self, goal: FactId) -> Option<Vec<usize>> {
        let n = self.derivations.len();
        let producer: BTreeMap<FactId, usize> =
            self.derivations.iter().enumerate().map(|(i, d)| (d.conclusion.fact, i)).collect();
        let mut indeg = alloc::vec![0usize; n];
        let mut users: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for (i, d) in self.derivations.iter().enumerate() {
            for p in &d.premises {
                if let Some(&j) = producer.get(&p.fact) {
                    indeg[i] += 1;
                    users[j].push(i);
                }
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|i| indeg[*i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while !ready.is_empty() {
            let pick = self.rng.gen_range(0..ready.len());
            let i = ready.swap_remove(pick);
            order.push(i);
            for &u in &users[i] {
                indeg[u] -= 1;
                if indeg[u] == 0 {
                    ready.push(u);
                }
            }
        }
        let last = *order.last()?;
        (order.len() == n && self.derivations[last].conclusion.fact == goal).then_some(order)
    }

    /// An extra rule over existing facts that holds under the world.
    fn distractor(&mut self) -> Option<()> {
        let facts: Vec<FactId> = self.world.keys().copied().collect();
        for _ in 0..64 {
            let template = self.templates[self.weights.sample(self.rng)];
            let chosen: Vec<FactId> = facts.choose_multiple(self.rng, template.arity()).copied().collect();
            if chosen.len() < template.arity() {
                return None;
            }
            let Ok(rule) = Rule::instantiate(template, &chosen) else { continue };
            if self.holds_in_world(&rule) && !self.rules.contains(&rule) {
                self.rules.push(rule);
                return Some(());
            }
        }
        None
    }
}

/// Per-step and chain-level verification results.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VerificationReport {
    pub steps: Vec<StepAssessment>,
    pub acyclic: bool,
    pub goal_reached: bool,
    pub consistent: bool,
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks every step for prefix validity, acyclicity of the dependency
/// graph and that the final step concludes the goal.
pub fn verify_chain(c: &CorrectChain) -> VerificationReport {
    let mut rep = VerificationReport::default();
    let theory = match c.theory() {
        Ok(t) => t,
        Err(e) => {
            rep.failures.push(format!("theory: {e}"));
            return rep;
        }
    };
    let mut walker = match PrefixWalker::new(&theory, &c.base_facts) {
        Ok(w) => w,
        Err(e) => {
            rep.failures.push(format!("base facts: {e}"));
            return rep;
        }
    };
    rep.consistent = true;
    for (i, s) in c.steps.iter().enumerate() {
        match walker.assess(s) {
            Ok(a) => {
                if !a.is_valid() {
                    rep.failures.push(format!("step {}: {}", i + 1, describe_assessment(&a)));
                }
                rep.steps.push(a);
            }
            Err(e) => {
                rep.consistent = false;
                rep.failures.push(format!("step {}: {e}", i + 1));
                break;
            }
        }
        walker.push(s);
    }
    rep.acyclic = topological_order(c).is_ok();
    if !rep.acyclic {
        rep.failures.push("dependency cycle".into());
    }
    rep.goal_reached = c.steps.last().map(|s| s.conclusion) == Some(c.goal);
    if !rep.goal_reached {
        rep.failures.push(format!("final conclusion is not the goal {}", c.goal));
    }
    rep
}

pub fn describe_assessment(a: &StepAssessment) -> String {
    let mut parts = Vec::new();
    if !a.rule_known {
        parts.push("rule not in the rule set");
    }
    if !a.semantic {
        parts.push("not entailed by the prefix");
    }
    if !a.established {
        parts.push("support not established");
    }
    if !a.licensed {
        parts.push("no licensed pattern");
    }
    if !a.novel {
        parts.push("conclusion already established");
    }
    parts.join(", ")
}

/// Dependency edges: step `t` depends on the latest earlier-or-later step
/// concluding a literal it cites. Returned as (dependent, dependency) pairs
/// over 0-based indices.
pub fn dependency_edges(steps: &[Step]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for (i, s) in steps.iter().enumerate() {
        for l in &s.supports {
            for (j, t) in steps.iter().enumerate() {
                if j != i && t.conclusion == *l {
                    edges.push((i, j));
                }
            }
        }
    }
    edges
}

/// Dependency-respecting order of 0-based step indices, breaking ties by
/// original index. Errors with the steps left on a cycle.
pub fn topological_order(c: &CorrectChain) -> Result<Vec<usize>> {
    topological_order_steps(&c.steps)
}

pub fn topological_order_steps(steps: &[Step]) -> Result<Vec<usize>> {
    let n = steps.len();
    let mut indeg = alloc::vec![0usize; n];
    let mut users: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    for (i, j) in dependency_edges(steps) {
        indeg[i] += 1;
        users[j].push(i);
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|i| indeg[*i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &u in &users[i] {
            indeg[u] -= 1;
            if indeg[u] == 0 {
                ready.insert(u);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(Error::Cycle((0..n).filter(|i| indeg[*i] > 0).collect()))
    }
}
