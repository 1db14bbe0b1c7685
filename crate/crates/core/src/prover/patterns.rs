//! Licensed inference patterns per rule template.
//!
//! Each pattern names slots by position in [`Rule::slots`] (`A` = 0,
//! `B` = 1, `C` = 2) and fixes the premise values it needs and the value it
//! derives. Converse use of an implication is never licensed.

use alloc::string::String;
use alloc::vec::Vec;

use crate::logic::{FactId, Literal, Rule, RuleTemplate, State, TruthValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InferencePattern {
    pub template: RuleTemplate,
    pub premises: &'static [(usize, bool)],
    pub derived: (usize, bool),
    pub direction: Direction,
}

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;
const T: bool = true;
const F: bool = false;

macro_rules! pat {
    ($tpl:ident, [$(($s:expr, $v:expr)),*] => ($ds:expr, $dv:expr), $dir:ident) => {
        InferencePattern {
            template: RuleTemplate::$tpl,
            premises: &[$(($s, $v)),*],
            derived: ($ds, $dv),
            direction: Direction::$dir,
        }
    };
}

static IMPL: [InferencePattern; 2] = [
    pat!(Impl, [(A, T)] => (B, T), Forward),
    pat!(Impl, [(B, F)] => (A, F), Backward),
];

static AND_ANTE: [InferencePattern; 3] = [
    pat!(AndAnte, [(A, T), (B, T)] => (C, T), Forward),
    pat!(AndAnte, [(C, F), (A, T)] => (B, F), Backward),
    pat!(AndAnte, [(C, F), (B, T)] => (A, F), Backward),
];

static AND_CONS: [InferencePattern; 4] = [
    pat!(AndCons, [(A, T)] => (B, T), Forward),
    pat!(AndCons, [(A, T)] => (C, T), Forward),
    pat!(AndCons, [(B, F)] => (A, F), Backward),
    pat!(AndCons, [(C, F)] => (A, F), Backward),
];

static OR_ANTE: [InferencePattern; 4] = [
    pat!(OrAnte, [(A, T)] => (C, T), Forward),
    pat!(OrAnte, [(B, T)] => (C, T), Forward),
    pat!(OrAnte, [(C, F)] => (A, F), Backward),
    pat!(OrAnte, [(C, F)] => (B, F), Backward),
];

static OR_CONS: [InferencePattern; 3] = [
    pat!(OrCons, [(A, T), (B, F)] => (C, T), Forward),
    pat!(OrCons, [(A, T), (C, F)] => (B, T), Forward),
    pat!(OrCons, [(B, F), (C, F)] => (A, F), Backward),
];

static XOR_ANTE: [InferencePattern; 6] = [
    pat!(XorAnte, [(A, T), (B, F)] => (C, T), Forward),
    pat!(XorAnte, [(A, F), (B, T)] => (C, T), Forward),
    pat!(XorAnte, [(C, F), (A, T)] => (B, T), Backward),
    pat!(XorAnte, [(C, F), (A, F)] => (B, F), Backward),
    pat!(XorAnte, [(C, F), (B, T)] => (A, T), Backward),
    pat!(XorAnte, [(C, F), (B, F)] => (A, F), Backward),
];

static XOR_BARE: [InferencePattern; 4] = [
    pat!(XorBare, [(A, T)] => (B, F), Forward),
    pat!(XorBare, [(A, F)] => (B, T), Forward),
    pat!(XorBare, [(B, T)] => (A, F), Backward),
    pat!(XorBare, [(B, F)] => (A, T), Backward),
];

static IMPL_CONVERSE: [InferencePattern; 2] = [
    pat!(Impl, [(B, T)] => (A, T), Forward),
    pat!(Impl, [(A, F)] => (B, F), Backward),
];

/// Licensed patterns of a template.
pub fn patterns_for(template: RuleTemplate) -> &'static [InferencePattern] {
    match template {
        RuleTemplate::Impl => &IMPL,
        RuleTemplate::AndAnte => &AND_ANTE,
        RuleTemplate::AndCons => &AND_CONS,
        RuleTemplate::OrAnte => &OR_ANTE,
        RuleTemplate::OrCons => &OR_CONS,
        RuleTemplate::XorAnte => &XOR_ANTE,
        RuleTemplate::XorBare => &XOR_BARE,
    }
}

/// Licensed patterns of a rule's template.
pub fn licensed_patterns(rule: &Rule) -> &'static [InferencePattern] {
    patterns_for(rule.template())
}

/// Unlicensed converse applications of a simple implication `A -> B`
/// (affirming the consequent, denying the antecedent). Empty for other
/// templates.
pub fn converse_patterns(rule: &Rule) -> &'static [InferencePattern] {
    match rule.template() {
        RuleTemplate::Impl => &IMPL_CONVERSE,
        _ => &[],
    }
}

impl InferencePattern {
    pub fn premise_literals(&self, rule: &Rule) -> Vec<Literal> {
        let slots = rule.slots();
        self.premises.iter().map(|(s, v)| Literal::new(slots[*s], *v)).collect()
    }

    pub fn derived_literal(&self, rule: &Rule) -> Literal {
        Literal::new(rule.slots()[self.derived.0], self.derived.1)
    }

    pub fn derived_fact(&self, rule: &Rule) -> FactId {
        rule.slots()[self.derived.0]
    }

    /// The derived literal if every premise holds in `state`.
    pub fn apply(&self, rule: &Rule, state: &State) -> Option<Literal> {
        let slots = rule.slots();
        self.premises
            .iter()
            .all(|(s, v)| state.holds(Literal::new(slots[*s], *v)))
            .then(|| self.derived_literal(rule))
    }

    /// Whether `supports` and `conclusion` instantiate this pattern: every
    /// premise literal is cited and the conclusion is the derived literal.
    pub fn matches(&self, rule: &Rule, supports: &[Literal], conclusion: Literal) -> bool {
        self.derived_literal(rule) == conclusion && self.premise_literals(rule).iter().all(|p| supports.contains(p))
    }
}

/// The first licensed pattern of `rule` matched by the step content.
pub fn matching_pattern(rule: &Rule, supports: &[Literal], conclusion: Literal) -> Option<&'static InferencePattern> {
    licensed_patterns(rule).iter().find(|p| p.matches(rule, supports, conclusion))
}

/// Checks every pattern in the catalog by enumerating all assignments of
/// its template's slot atoms: wherever the rule and the premises hold, the
/// derived literal must hold, and at least one such assignment must exist.
pub fn verify_catalog() -> Result<(), String> {
    let all = RuleTemplate::ALL
        .iter()
        .flat_map(|t| patterns_for(*t).iter())
        .chain(IMPL_CONVERSE.iter().filter(|_| false));
    for p in all {
        let arity = p.template.arity();
        let facts: Vec<FactId> = (0..arity as u32).map(FactId).collect();
        let rule = Rule::instantiate(p.template, &facts).map_err(|e| alloc::format!("{e}"))?;
        let mut witnessed = false;
        for bits in 0u32..(1 << arity) {
            let mut s = State::new();
            for (i, f) in facts.iter().enumerate() {
                s.overwrite(Literal::new(*f, bits >> i & 1 == 1));
            }
            if rule.eval(&s) != TruthValue::True {
                continue;
            }
            if !p.premise_literals(&rule).iter().all(|l| s.holds(*l)) {
                continue;
            }
            witnessed = true;
            if !s.holds(p.derived_literal(&rule)) {
                return Err(alloc::format!("unsound pattern {p:?}"));
            }
        }
        if !witnessed {
            return Err(alloc::format!("vacuous pattern {p:?}"));
        }
    }
    Ok(())
}
