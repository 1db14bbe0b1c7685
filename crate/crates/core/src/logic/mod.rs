//! Fact atoms, expressions, rules and three-valued states.
//!
//! Concrete syntax: atoms are written `[F<n>]` (the alias `[[F<n>]]` is
//! accepted on input), connectives are `and`, `or`, `xor` and `->`.
//! Negation is not a connective; it is expressed through False-valued
//! literals.

mod parse;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

pub use parse::{parse_expr, parse_literal, parse_rule};

/// A fact symbol, rendered as `[F<index>]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactId(pub u32);

impl FactId {
    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[F{}]", self.0)
    }
}

/// Kleene truth value. The variant order gives `False < Unknown < True`,
/// so conjunction is `min` and disjunction is `max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TruthValue {
    False,
    Unknown,
    True,
}

impl core::ops::Not for TruthValue {
    type Output = Self;

    fn not(self) -> Self {
        match self {
            TruthValue::True => TruthValue::False,
            TruthValue::False => TruthValue::True,
            TruthValue::Unknown => TruthValue::Unknown,
        }
    }
}

impl TruthValue {
    pub fn and(self, other: Self) -> Self {
        self.min(other)
    }

    pub fn or(self, other: Self) -> Self {
        self.max(other)
    }

    pub fn xor(self, other: Self) -> Self {
        match (self.known(), other.known()) {
            (Some(a), Some(b)) => (a != b).into(),
            _ => TruthValue::Unknown,
        }
    }

    /// `None` for `Unknown`.
    pub fn known(self) -> Option<bool> {
        match self {
            TruthValue::True => Some(true),
            TruthValue::False => Some(false),
            TruthValue::Unknown => None,
        }
    }
}

impl From<bool> for TruthValue {
    fn from(b: bool) -> Self {
        if b {
            TruthValue::True
        } else {
            TruthValue::False
        }
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthValue::True => "True",
            TruthValue::False => "False",
            TruthValue::Unknown => "Unknown",
        })
    }
}

/// A definite assignment `fact = value`. Unknown is not representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub fact: FactId,
    pub value: bool,
}

impl Literal {
    pub fn new(fact: FactId, value: bool) -> Self {
        Literal { fact, value }
    }

    pub fn negated(self) -> Self {
        Literal { fact: self.fact, value: !self.value }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.fact, TruthValue::from(self.value))
    }
}

impl FromStr for Literal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_literal(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Atom(FactId),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn atom(index: u32) -> Self {
        Expr::Atom(FactId(index))
    }

    pub fn and(l: Expr, r: Expr) -> Self {
        Expr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Expr, r: Expr) -> Self {
        Expr::Or(Box::new(l), Box::new(r))
    }

    pub fn xor(l: Expr, r: Expr) -> Self {
        Expr::Xor(Box::new(l), Box::new(r))
    }

    pub fn eval(&self, state: &State) -> TruthValue {
        match self {
            Expr::Atom(f) => state.get(*f),
            Expr::And(l, r) => l.eval(state).and(r.eval(state)),
            Expr::Or(l, r) => l.eval(state).or(r.eval(state)),
            Expr::Xor(l, r) => l.eval(state).xor(r.eval(state)),
        }
    }

    /// Atoms in left-to-right order, duplicates kept.
    pub fn atoms(&self) -> Vec<FactId> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<FactId>) {
        match self {
            Expr::Atom(f) => out.push(*f),
            Expr::And(l, r) | Expr::Or(l, r) | Expr::Xor(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    fn as_atom(&self) -> Option<FactId> {
        match self {
            Expr::Atom(f) => Some(*f),
            _ => None,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, l, r) = match self {
            Expr::Atom(id) => return write!(f, "{id}"),
            Expr::And(l, r) => ("and", l, r),
            Expr::Or(l, r) => ("or", l, r),
            Expr::Xor(l, r) => ("xor", l, r),
        };
        write!(f, "({l} {op} {r})")
    }
}

/// Canonical text of an expression.
pub fn render_expr(e: &Expr) -> String {
    e.to_string()
}

/// The seven rule shapes. Slot names follow the textual order of atoms:
/// `A -> B`, `(A and B) -> C`, `A -> (B and C)`, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleTemplate {
    Impl,
    AndAnte,
    AndCons,
    OrAnte,
    OrCons,
    XorAnte,
    XorBare,
}

impl RuleTemplate {
    pub const ALL: [RuleTemplate; 7] = [
        RuleTemplate::Impl,
        RuleTemplate::AndAnte,
        RuleTemplate::AndCons,
        RuleTemplate::OrAnte,
        RuleTemplate::OrCons,
        RuleTemplate::XorAnte,
        RuleTemplate::XorBare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleTemplate::Impl => "IMPL",
            RuleTemplate::AndAnte => "AND_ANTE",
            RuleTemplate::AndCons => "AND_CONS",
            RuleTemplate::OrAnte => "OR_ANTE",
            RuleTemplate::OrCons => "OR_CONS",
            RuleTemplate::XorAnte => "XOR_ANTE",
            RuleTemplate::XorBare => "XOR_BARE",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            RuleTemplate::Impl | RuleTemplate::XorBare => 2,
            _ => 3,
        }
    }

    pub fn is_implication(self) -> bool {
        self != RuleTemplate::XorBare
    }

    /// True for the templates carrying an `and` or `or` connective.
    pub fn has_and_or(self) -> bool {
        matches!(
            self,
            RuleTemplate::AndAnte | RuleTemplate::AndCons | RuleTemplate::OrAnte | RuleTemplate::OrCons
        )
    }

    pub fn has_xor(self) -> bool {
        matches!(self, RuleTemplate::XorAnte | RuleTemplate::XorBare)
    }
}

impl fmt::Display for RuleTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RuleTemplate::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(alloc::format!("unknown rule template `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RuleShape {
    Implication { antecedent: Expr, consequent: Expr },
    XorConstraint { left: FactId, right: FactId },
}

/// A rule restricted to one of the seven [`RuleTemplate`] shapes, with its
/// slot bindings cached.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    shape: RuleShape,
    template: RuleTemplate,
    slots: [FactId; 3],
}

impl Rule {
    /// Classifies `shape` into a template; shapes outside the pool and rules
    /// repeating a fact are rejected.
    pub fn from_shape(shape: RuleShape) -> Result<Rule> {
        let unsupported = |shape: &RuleShape| Error::UnsupportedRule(render_shape(shape));
        let (template, slots): (RuleTemplate, Vec<FactId>) = match &shape {
            RuleShape::XorConstraint { left, right } => (RuleTemplate::XorBare, alloc::vec![*left, *right]),
            RuleShape::Implication { antecedent, consequent } => {
                let pair = |l: &Expr, r: &Expr| Some((l.as_atom()?, r.as_atom()?));
                match (antecedent, consequent) {
                    (Expr::Atom(a), Expr::Atom(b)) => (RuleTemplate::Impl, alloc::vec![*a, *b]),
                    (ante, Expr::Atom(c)) => {
                        let (t, l, r) = match ante {
                            Expr::And(l, r) => (RuleTemplate::AndAnte, l, r),
                            Expr::Or(l, r) => (RuleTemplate::OrAnte, l, r),
                            Expr::Xor(l, r) => (RuleTemplate::XorAnte, l, r),
                            Expr::Atom(_) => unreachable!(),
                        };
                        let (a, b) = pair(l, r).ok_or_else(|| unsupported(&shape))?;
                        (t, alloc::vec![a, b, *c])
                    }
                    (Expr::Atom(a), cons) => {
                        let (t, l, r) = match cons {
                            Expr::And(l, r) => (RuleTemplate::AndCons, l, r),
                            Expr::Or(l, r) => (RuleTemplate::OrCons, l, r),
                            _ => return Err(unsupported(&shape)),
                        };
                        let (b, c) = pair(l, r).ok_or_else(|| unsupported(&shape))?;
                        (t, alloc::vec![*a, b, c])
                    }
                    _ => return Err(unsupported(&shape)),
                }
            }
        };
        for (i, f) in slots.iter().enumerate() {
            if slots[..i].contains(f) {
                return Err(Error::UnsupportedRule(alloc::format!(
                    "{} (fact {f} repeated)",
                    render_shape(&shape)
                )));
            }
        }
        let mut fixed = [FactId(0); 3];
        fixed[..slots.len()].copy_from_slice(&slots);
        Ok(Rule { shape, template, slots: fixed })
    }

    /// Binds `facts` to the template's slots in order.
    pub fn instantiate(template: RuleTemplate, facts: &[FactId]) -> Result<Rule> {
        if facts.len() != template.arity() {
            return Err(Error::UnsupportedRule(alloc::format!(
                "{template} needs {} facts, got {}",
                template.arity(),
                facts.len()
            )));
        }
        let at = |i: usize| Expr::Atom(facts[i]);
        let shape = match template {
            RuleTemplate::Impl => RuleShape::Implication { antecedent: at(0), consequent: at(1) },
            RuleTemplate::AndAnte => RuleShape::Implication { antecedent: Expr::and(at(0), at(1)), consequent: at(2) },
            RuleTemplate::AndCons => RuleShape::Implication { antecedent: at(0), consequent: Expr::and(at(1), at(2)) },
            RuleTemplate::OrAnte => RuleShape::Implication { antecedent: Expr::or(at(0), at(1)), consequent: at(2) },
            RuleTemplate::OrCons => RuleShape::Implication { antecedent: at(0), consequent: Expr::or(at(1), at(2)) },
            RuleTemplate::XorAnte => RuleShape::Implication { antecedent: Expr::xor(at(0), at(1)), consequent: at(2) },
            RuleTemplate::XorBare => RuleShape::XorConstraint { left: facts[0], right: facts[1] },
        };
        Rule::from_shape(shape)
    }

    pub fn shape(&self) -> &RuleShape {
        &self.shape
    }

    pub fn template(&self) -> RuleTemplate {
        self.template
    }

    /// Slot bindings in template order (`A`, `B`, `C`).
    pub fn slots(&self) -> &[FactId] {
        &self.slots[..self.template.arity()]
    }

    pub fn mentions(&self, fact: FactId) -> bool {
        self.slots().contains(&fact)
    }

    pub fn slot_of(&self, fact: FactId) -> Option<usize> {
        self.slots().iter().position(|f| *f == fact)
    }

    /// Kleene truth value of the rule under a partial state.
    pub fn eval(&self, state: &State) -> TruthValue {
        match &self.shape {
            RuleShape::Implication { antecedent, consequent } => (!antecedent.eval(state)).or(consequent.eval(state)),
            RuleShape::XorConstraint { left, right } => state.get(*left).xor(state.get(*right)),
        }
    }

    /// The antecedent expression, `None` for a bare xor constraint.
    pub fn antecedent(&self) -> Option<&Expr> {
        match &self.shape {
            RuleShape::Implication { antecedent, .. } => Some(antecedent),
            RuleShape::XorConstraint { .. } => None,
        }
    }
}

fn render_shape(shape: &RuleShape) -> String {
    match shape {
        RuleShape::Implication { antecedent, consequent } => alloc::format!("{antecedent} -> {consequent}"),
        RuleShape::XorConstraint { left, right } => alloc::format!("{left} xor {right}"),
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_shape(&self.shape))
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_rule(s)
    }
}

/// Canonical text of a rule.
pub fn render_rule(r: &Rule) -> String {
    r.to_string()
}

/// Three-valued assignment of facts. Facts absent from the map are Unknown.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct State {
    values: BTreeMap<FactId, bool>,
}

impl State {
    pub fn new() -> Self {
        State::default()
    }

    pub fn from_literals<'a>(lits: impl IntoIterator<Item = &'a Literal>) -> Result<Self> {
        let mut s = State::new();
        for l in lits {
            s.assign(*l)?;
        }
        Ok(s)
    }

    pub fn get(&self, fact: FactId) -> TruthValue {
        self.value(fact).map_or(TruthValue::Unknown, TruthValue::from)
    }

    pub fn value(&self, fact: FactId) -> Option<bool> {
        self.values.get(&fact).copied()
    }

    pub fn holds(&self, lit: Literal) -> bool {
        self.value(lit.fact) == Some(lit.value)
    }

    /// Assigns `lit`; returns whether the state changed. Assigning the
    /// negation of a known value is an error.
    pub fn assign(&mut self, lit: Literal) -> Result<bool> {
        match self.values.get(&lit.fact) {
            Some(v) if *v == lit.value => Ok(false),
            Some(_) => Err(Error::Contradiction(lit.to_string())),
            None => {
                self.values.insert(lit.fact, lit.value);
                Ok(true)
            }
        }
    }

    /// Assigns `lit` even if the fact already holds the opposite value.
    /// Only counterfactual recomputation uses this.
    pub fn overwrite(&mut self, lit: Literal) {
        self.values.insert(lit.fact, lit.value);
    }

    pub fn unassign(&mut self, fact: FactId) {
        self.values.remove(&fact);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.values.iter().map(|(f, v)| Literal::new(*f, *v))
    }

    pub fn facts(&self) -> impl Iterator<Item = FactId> + '_ {
        self.values.keys().copied()
    }
}

/// Kleene evaluation of `e` under `s`.
pub fn eval_expr(e: &Expr, s: &State) -> TruthValue {
    e.eval(s)
}
