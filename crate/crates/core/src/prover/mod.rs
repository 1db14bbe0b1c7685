//! Entailment over a rule set and a partial state.
//!
//! The backend enumerates every full assignment of the fact universe that
//! extends the state and satisfies all rules. Universes are small (cap 24),
//! so a depth-first enumeration that checks each rule as soon as its last
//! atom is assigned is fast enough for corpus generation. [`propagate`] is a
//! sound but incomplete fast path built on the licensed patterns.

mod patterns;
mod validity;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

pub use patterns::{
    converse_patterns, licensed_patterns, matching_pattern, patterns_for, verify_catalog, Direction,
    InferencePattern,
};
pub use validity::{PrefixWalker, StepAssessment};

use crate::chain::Step;
use crate::error::{Error, Result};
use crate::logic::{FactId, Literal, Rule, State, TruthValue};

/// Hard limit on universe size; assignments are stored in a `u32`.
pub const MAX_CAP: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    rules: Vec<Rule>,
    universe: Vec<FactId>,
    cap: usize,
}

impl Theory {
    pub const DEFAULT_CAP: usize = 24;

    /// Theory whose universe is the facts mentioned by `rules`.
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        Theory::with_facts(rules, core::iter::empty())
    }

    /// Theory over the rules' facts plus `extra`.
    pub fn with_facts(rules: Vec<Rule>, extra: impl IntoIterator<Item = FactId>) -> Result<Self> {
        let mut u: BTreeSet<FactId> = extra.into_iter().collect();
        for r in &rules {
            u.extend(r.slots().iter().copied());
        }
        let th = Theory { rules, universe: u.into_iter().collect(), cap: Theory::DEFAULT_CAP };
        th.check_cap(th.universe.len())?;
        Ok(th)
    }

    pub fn with_cap(mut self, cap: usize) -> Result<Self> {
        if cap > MAX_CAP {
            return Err(Error::Config(alloc::format!("universe cap {cap} exceeds {MAX_CAP}")));
        }
        self.cap = cap;
        self.check_cap(self.universe.len())?;
        Ok(self)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn universe(&self) -> &[FactId] {
        &self.universe
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    fn check_cap(&self, size: usize) -> Result<()> {
        if size > self.cap {
            Err(Error::UniverseTooLarge { size, cap: self.cap })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntailmentStatus {
    Entailed,
    NotEntailed,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntailmentResult {
    pub status: EntailmentStatus,
    /// Countermodel, present iff `status` is `NotEntailed`.
    pub witness: Option<State>,
}

impl EntailmentResult {
    pub fn is_entailed(&self) -> bool {
        self.status == EntailmentStatus::Entailed
    }
}

#[derive(Debug, Clone, Copy)]
struct CompiledRule {
    vars: [u8; 3],
    arity: u8,
    /// Bit `i` is set iff the rule holds when slot `j` takes bit `j` of `i`.
    table: u8,
}

impl CompiledRule {
    fn holds(&self, assignment: u32) -> bool {
        let mut idx = 0u8;
        for j in 0..self.arity as usize {
            idx |= ((assignment >> self.vars[j]) & 1) as u8 * (1 << j);
        }
        self.table >> idx & 1 == 1
    }
}

/// Search space: variables in enumeration order, with fixed values and the
/// rules that become decidable at each depth.
struct Space {
    facts: Vec<FactId>,
    fixed_mask: u32,
    fixed_val: u32,
    checks: Vec<Vec<CompiledRule>>,
}

fn truth_table(rule: &Rule) -> u8 {
    let arity = rule.slots().len();
    let mut table = 0u8;
    for bits in 0..(1u8 << arity) {
        let mut s = State::new();
        for (j, f) in rule.slots().iter().enumerate() {
            s.overwrite(Literal::new(*f, bits >> j & 1 == 1));
        }
        if rule.eval(&s) == TruthValue::True {
            table |= 1 << bits;
        }
    }
    table
}

impl Space {
    fn build(th: &Theory, s: &State, extra: &[FactId]) -> Result<Space> {
        let mut all: BTreeSet<FactId> = th.universe.iter().copied().collect();
        all.extend(s.facts());
        all.extend(extra.iter().copied());
        th.check_cap(all.len())?;
        if all.len() > MAX_CAP {
            return Err(Error::UniverseTooLarge { size: all.len(), cap: MAX_CAP });
        }

        // Fixed facts first, then free facts in order of first mention by a
        // rule so that rules become decidable early.
        let mut order: Vec<FactId> = s.facts().collect();
        let mut seen: BTreeSet<FactId> = order.iter().copied().collect();
        for r in &th.rules {
            for f in r.slots() {
                if seen.insert(*f) {
                    order.push(*f);
                }
            }
        }
        for f in &all {
            if seen.insert(*f) {
                order.push(*f);
            }
        }

        let pos = |f: FactId| order.iter().position(|g| *g == f).expect("fact in order") as u8;
        let mut fixed_mask = 0u32;
        let mut fixed_val = 0u32;
        for lit in s.literals() {
            let p = pos(lit.fact);
            fixed_mask |= 1 << p;
            if lit.value {
                fixed_val |= 1 << p;
            }
        }
        let mut checks = alloc::vec![Vec::new(); order.len()];
        for r in &th.rules {
            let mut vars = [0u8; 3];
            for (j, f) in r.slots().iter().enumerate() {
                vars[j] = pos(*f);
            }
            let arity = r.slots().len() as u8;
            let depth = vars[..arity as usize].iter().copied().max().unwrap_or(0) as usize;
            checks[depth].push(CompiledRule { vars, arity, table: truth_table(r) });
        }
        Ok(Space { facts: order, fixed_mask, fixed_val, checks })
    }

    /// Calls `visit` on every model; stops early when `visit` returns false.
    fn enumerate(&self, visit: &mut dyn FnMut(u32) -> bool) {
        if self.facts.is_empty() {
            visit(0);
            return;
        }
        self.dfs(0, 0, visit);
    }

    fn dfs(&self, depth: usize, assignment: u32, visit: &mut dyn FnMut(u32) -> bool) -> bool {
        let bit = 1u32 << depth;
        let choices: &[bool] = if self.fixed_mask & bit != 0 {
            if self.fixed_val & bit != 0 {
                &[true]
            } else {
                &[false]
            }
        } else {
            &[false, true]
        };
        for &v in choices {
            let a = if v { assignment | bit } else { assignment };
            if !self.checks[depth].iter().all(|r| r.holds(a)) {
                continue;
            }
            let go_on = if depth + 1 == self.facts.len() { visit(a) } else { self.dfs(depth + 1, a, visit) };
            if !go_on {
                return false;
            }
        }
        true
    }

    fn index_of(&self, f: FactId) -> Option<usize> {
        self.facts.iter().position(|g| *g == f)
    }

    fn to_state(&self, assignment: u32) -> State {
        let mut s = State::new();
        for (i, f) in self.facts.iter().enumerate() {
            s.overwrite(Literal::new(*f, assignment >> i & 1 == 1));
        }
        s
    }
}

/// Number of full assignments of the universe (theory facts plus state
/// facts) that extend `s` and satisfy every rule.
pub fn count_models(th: &Theory, s: &State) -> Result<u64> {
    count_models_over(th, s, &[])
}

/// As [`count_models`] with `extra` facts added to the universe.
pub fn count_models_over(th: &Theory, s: &State, extra: &[FactId]) -> Result<u64> {
    let space = Space::build(th, s, extra)?;
    let mut n = 0u64;
    space.enumerate(&mut |_| {
        n += 1;
        true
    });
    Ok(n)
}

/// Decides whether `q` holds in every model of the rules extending `s`.
pub fn entails(th: &Theory, s: &State, q: Literal) -> Result<EntailmentResult> {
    let space = Space::build(th, s, &[q.fact])?;
    let qi = space.index_of(q.fact).expect("query fact in space");
    let mut any = false;
    let mut counter = None;
    space.enumerate(&mut |a| {
        any = true;
        if (a >> qi & 1 == 1) != q.value {
            counter = Some(a);
            false
        } else {
            true
        }
    });
    Ok(match (any, counter) {
        (false, _) => EntailmentResult { status: EntailmentStatus::Inconsistent, witness: None },
        (true, Some(a)) => EntailmentResult { status: EntailmentStatus::NotEntailed, witness: Some(space.to_state(a)) },
        (true, None) => EntailmentResult { status: EntailmentStatus::Entailed, witness: None },
    })
}

/// The literals fixed across all models of a theory plus state, computed in
/// one enumeration. Answers many entailment queries against the same state.
#[derive(Debug, Clone)]
pub struct Backbone {
    facts: Vec<FactId>,
    models: u64,
    all_true: u32,
    any_true: u32,
}

impl Backbone {
    pub fn compute(th: &Theory, s: &State) -> Result<Backbone> {
        Backbone::compute_over(th, s, &[])
    }

    pub fn compute_over(th: &Theory, s: &State, extra: &[FactId]) -> Result<Backbone> {
        let space = Space::build(th, s, extra)?;
        let mut models = 0u64;
        let mut all_true = u32::MAX;
        let mut any_true = 0u32;
        space.enumerate(&mut |a| {
            models += 1;
            all_true &= a;
            any_true |= a;
            true
        });
        Ok(Backbone { facts: space.facts, models, all_true, any_true })
    }

    pub fn models(&self) -> u64 {
        self.models
    }

    pub fn is_consistent(&self) -> bool {
        self.models > 0
    }

    /// Whether `lit` holds in every model. Facts outside the universe are
    /// never entailed; an inconsistent backbone entails nothing.
    pub fn entails(&self, lit: Literal) -> bool {
        if self.models == 0 {
            return false;
        }
        match self.facts.iter().position(|f| *f == lit.fact) {
            None => false,
            Some(i) if lit.value => self.all_true >> i & 1 == 1,
            Some(i) => self.any_true >> i & 1 == 0,
        }
    }

    /// All entailed literals, in fact order.
    pub fn literals(&self) -> Vec<Literal> {
        let mut out: Vec<Literal> = Vec::new();
        for f in &self.facts {
            for v in [true, false] {
                if self.entails(Literal::new(*f, v)) {
                    out.push(Literal::new(*f, v));
                }
            }
        }
        out.sort();
        out
    }
}

/// Least fixpoint of the licensed patterns over `s`.
pub fn propagate(th: &Theory, s: &State) -> Result<State> {
    let mut out = s.clone();
    loop {
        let mut changed = false;
        for r in &th.rules {
            for p in licensed_patterns(r) {
                if let Some(lit) = p.apply(r, &out) {
                    if out.holds(lit.negated()) {
                        return Err(Error::Contradiction(alloc::format!("{lit} via {r}")));
                    }
                    changed |= out.assign(lit)?;
                }
            }
        }
        if !changed {
            return Ok(out);
        }
    }
}

/// Whether every support and the conclusion of `step` are entailed by the
/// rules and the prefix state.
pub fn check_step_semantic(th: &Theory, prefix_state: &State, step: &Step) -> Result<bool> {
    let extra: Vec<FactId> = step.facts().collect();
    let bb = Backbone::compute_over(th, prefix_state, &extra)?;
    if !bb.is_consistent() {
        return Err(Error::InconsistentPrefix);
    }
    Ok(step.supports.iter().all(|l| bb.entails(*l)) && bb.entails(step.conclusion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_literal, parse_rule};

    fn th(rules: &[&str]) -> Theory {
        Theory::new(rules.iter().map(|r| parse_rule(r).unwrap()).collect()).unwrap()
    }

    fn st(lits: &[&str]) -> State {
        let mut s = State::new();
        for l in lits {
            s.assign(parse_literal(l).unwrap()).unwrap();
        }
        s
    }

    #[test]
    fn count_models_examples() {
        assert_eq!(count_models(&th(&["[F0] -> [F5]"]), &State::new()).unwrap(), 3);
        assert_eq!(count_models(&th(&["[F0] xor [F1]"]), &st(&["[F0]=True"])).unwrap(), 1);
        assert_eq!(count_models(&th(&["[F0] -> [F1]"]), &st(&["[F0]=True", "[F1]=False"])).unwrap(), 0);
    }

    #[test]
    fn empty_theory_counts_all_assignments() {
        for n in 0..=10u32 {
            let t = Theory::with_facts(Vec::new(), (0..n).map(FactId)).unwrap();
            assert_eq!(count_models(&t, &State::new()).unwrap(), 1 << n);
        }
    }

    #[test]
    fn entailment_examples() {
        let r = entails(&th(&["[F0] -> [F5]"]), &st(&["[F5]=False"]), parse_literal("[F0]=False").unwrap()).unwrap();
        assert_eq!(r.status, EntailmentStatus::Entailed);
        assert!(r.witness.is_none());

        let r = entails(
            &th(&["[F7] -> ([F8] or [F5])"]),
            &st(&["[F7]=True", "[F8]=False"]),
            parse_literal("[F5]=True").unwrap(),
        )
        .unwrap();
        assert_eq!(r.status, EntailmentStatus::Entailed);

        let r = entails(
            &th(&["[F2] -> ([F6] and [F7])"]),
            &st(&["[F6]=False", "[F7]=True"]),
            parse_literal("[F2]=True").unwrap(),
        )
        .unwrap();
        assert_eq!(r.status, EntailmentStatus::NotEntailed);
        let w = r.witness.unwrap();
        assert_eq!(w.value(FactId(2)), Some(false));
    }

    #[test]
    fn inconsistent_state() {
        let r = entails(&th(&["[F0] -> [F1]"]), &st(&["[F0]=True", "[F1]=False"]), parse_literal("[F1]=True").unwrap())
            .unwrap();
        assert_eq!(r.status, EntailmentStatus::Inconsistent);
    }

    #[test]
    fn universe_cap() {
        let t = Theory::with_facts(Vec::new(), (0..10).map(FactId)).unwrap().with_cap(12).unwrap();
        let s = State::from_literals(&[Literal::new(FactId(40), true), Literal::new(FactId(41), true), Literal::new(FactId(42), true)])
            .unwrap();
        assert!(matches!(count_models(&t, &s), Err(Error::UniverseTooLarge { size: 13, cap: 12 })));
        assert!(matches!(Theory::with_facts(Vec::new(), (0..25).map(FactId)), Err(Error::UniverseTooLarge { .. })));
    }

    #[test]
    fn propagate_examples() {
        let out = propagate(&th(&["[F9] xor [F12]"]), &st(&["[F12]=False"])).unwrap();
        assert!(out.holds(parse_literal("[F9]=True").unwrap()));
        let s = st(&["[F0]=True"]);
        assert_eq!(propagate(&th(&[]), &s).unwrap(), s);
        assert!(matches!(
            propagate(&th(&["[F0] -> [F1]"]), &st(&["[F0]=True", "[F1]=False"])),
            Err(Error::Contradiction(_))
        ));
    }

    #[test]
    fn backbone_matches_entails() {
        let t = th(&["([F0] and [F1]) -> [F2]", "[F2] xor [F3]", "[F4] -> ([F0] or [F5])"]);
        let s = st(&["[F0]=True", "[F1]=True"]);
        let bb = Backbone::compute(&t, &s).unwrap();
        for f in t.universe() {
            for v in [true, false] {
                let lit = Literal::new(*f, v);
                assert_eq!(bb.entails(lit), entails(&t, &s, lit).unwrap().is_entailed(), "{lit}");
            }
        }
        assert!(bb.entails(parse_literal("[F3]=False").unwrap()));
    }
}
