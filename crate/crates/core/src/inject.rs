//! Error injection, counterfactual recomputation and first-error checks.
//!
//! Positions `k` are 1-based and refer to the erroneous chain. Truth-state
//! errors keep the step's rule and replace its conclusion by a canonical
//! wrong value; structural errors change the shape of the chain around `k`.
//! Steps after `k` are re-derived by pattern application over an explicit
//! counterfactual state, never by global entailment.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand::RngCore;

use crate::chain::{prefix_state, synthesize_chain_counted, verify_chain, CorrectChain, Step, SynthesisConfig};
use crate::error::{Error, Result};
use crate::labels::{sample_error_type_with, ErrorWeights};
use crate::logic::{Literal, RuleTemplate, State};
use crate::prover::{
    converse_patterns, entails, licensed_patterns, matching_pattern, Direction, EntailmentStatus, InferencePattern,
    PrefixWalker,
};
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorGroup {
    TruthState,
    Structural,
}

impl ErrorGroup {
    pub fn name(self) -> &'static str {
        match self {
            ErrorGroup::TruthState => "truth_state",
            ErrorGroup::Structural => "structural",
        }
    }
}

impl fmt::Display for ErrorGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truth_state" => Ok(ErrorGroup::TruthState),
            "structural" => Ok(ErrorGroup::Structural),
            _ => Err(Error::Config(format!("unknown error group `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorType {
    DropCondition,
    ImplicationMisuse,
    OrAndConfusion,
    PartialEvaluation,
    XorAsOr,
    XorAsEquiv,
    VacuousTruthError,
    ConverseError,
    RedundantStep,
    MissingPrerequisite,
    CircularReference,
}

impl ErrorType {
    pub const ALL: [ErrorType; 11] = [
        ErrorType::DropCondition,
        ErrorType::ImplicationMisuse,
        ErrorType::OrAndConfusion,
        ErrorType::PartialEvaluation,
        ErrorType::XorAsOr,
        ErrorType::XorAsEquiv,
        ErrorType::VacuousTruthError,
        ErrorType::ConverseError,
        ErrorType::RedundantStep,
        ErrorType::MissingPrerequisite,
        ErrorType::CircularReference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorType::DropCondition => "drop_condition",
            ErrorType::ImplicationMisuse => "implication_misuse",
            ErrorType::OrAndConfusion => "or_and_confusion",
            ErrorType::PartialEvaluation => "partial_evaluation",
            ErrorType::XorAsOr => "xor_as_or",
            ErrorType::XorAsEquiv => "xor_as_equiv",
            ErrorType::VacuousTruthError => "vacuous_truth_error",
            ErrorType::ConverseError => "converse_error",
            ErrorType::RedundantStep => "redundant_step",
            ErrorType::MissingPrerequisite => "missing_prerequisite",
            ErrorType::CircularReference => "circular_reference",
        }
    }

    pub fn group(self) -> ErrorGroup {
        match self {
            ErrorType::ConverseError
            | ErrorType::RedundantStep
            | ErrorType::MissingPrerequisite
            | ErrorType::CircularReference => ErrorGroup::Structural,
            _ => ErrorGroup::TruthState,
        }
    }

    /// Change in chain length caused by the error.
    pub fn length_delta(self) -> isize {
        match self {
            ErrorType::RedundantStep => 1,
            ErrorType::MissingPrerequisite => -1,
            _ => 0,
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ErrorType::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown error type `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErroneousChain {
    pub steps: Vec<Step>,
    pub k: usize,
    pub error_type: ErrorType,
    /// Counterfactual state before each step `t > k`, in order.
    pub corrupted_state_log: Vec<State>,
    /// Original (correct-chain) indices of downstream steps that could not
    /// be re-derived and were dropped. Empty unless step dropping is on.
    pub dropped_steps: Vec<usize>,
}

impl ErroneousChain {
    /// Builds the chain and recomputes its counterfactual state log.
    pub fn new(base_facts: &[Literal], steps: Vec<Step>, k: usize, error_type: ErrorType) -> Result<Self> {
        let corrupted_state_log = counterfactual_log(base_facts, &steps, k)?;
        Ok(ErroneousChain { steps, k, error_type, corrupted_state_log, dropped_steps: Vec::new() })
    }
}

/// Counterfactual state before every step after `k`: the prefix state, then
/// step `k`'s supports and conclusion written with overwrite, then each
/// later conclusion.
pub fn counterfactual_log(base_facts: &[Literal], steps: &[Step], k: usize) -> Result<Vec<State>> {
    if k == 0 || k > steps.len() {
        return Err(Error::InjectionInfeasible(format!("k={k} outside 1..={}", steps.len())));
    }
    let mut state = corrupted_state(base_facts, &steps[..k - 1], &steps[k - 1])?;
    let mut log = Vec::with_capacity(steps.len() - k);
    for s in &steps[k..] {
        log.push(state.clone());
        state.overwrite(s.conclusion);
    }
    Ok(log)
}

fn corrupted_state(base_facts: &[Literal], prefix: &[Step], corrupted: &Step) -> Result<State> {
    let mut state = prefix_state(base_facts, prefix)?;
    for l in &corrupted.supports {
        state.overwrite(*l);
    }
    state.overwrite(corrupted.conclusion);
    Ok(state)
}

/// A correct chain paired with an erroneous chain sharing its prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub correct: CorrectChain,
    pub erroneous: ErroneousChain,
}

impl Instance {
    pub fn k(&self) -> usize {
        self.erroneous.k
    }

    pub fn error_type(&self) -> ErrorType {
        self.erroneous.error_type
    }
}

/// The licensed pattern a correct-chain step instantiates.
fn step_pattern(s: &Step) -> Option<&'static InferencePattern> {
    matching_pattern(&s.rule, &s.supports, s.conclusion)
}

/// Error types whose requirements step `k` (1-based) of `c` meets.
pub fn applicable_errors(c: &CorrectChain, k: usize) -> BTreeSet<ErrorType> {
    let mut out = BTreeSet::new();
    if k == 0 || k > c.steps.len() {
        return out;
    }
    let step = &c.steps[k - 1];
    let Some(p) = step_pattern(step) else { return out };
    let t = step.rule.template();
    for e in ErrorType::ALL {
        let ok = match e {
            ErrorType::XorAsEquiv => t.has_xor(),
            ErrorType::XorAsOr => t == RuleTemplate::XorBare && p.premises[0].1,
            ErrorType::OrAndConfusion => t.has_and_or(),
            ErrorType::DropCondition => t.has_and_or() && p.direction == Direction::Backward,
            ErrorType::PartialEvaluation => t.has_and_or() && p.direction == Direction::Forward,
            ErrorType::ImplicationMisuse => t.is_implication(),
            ErrorType::VacuousTruthError => {
                t.is_implication() && t != RuleTemplate::OrAnte && p.direction == Direction::Forward
            }
            ErrorType::ConverseError => t == RuleTemplate::Impl,
            ErrorType::RedundantStep => k >= 2,
            ErrorType::MissingPrerequisite => k >= 2 && bridge_consumer(c, k).is_some(),
            ErrorType::CircularReference => !consumers(c, k).is_empty(),
        };
        if ok {
            out.insert(e);
        }
    }
    out
}

/// 1-based indices of steps after `k` citing step `k`'s conclusion.
fn consumers(c: &CorrectChain, k: usize) -> Vec<usize> {
    let lit = c.steps[k - 1].conclusion;
    (k + 1..=c.steps.len()).filter(|&j| c.steps[j - 1].cites(lit)).collect()
}

/// The unique consumer of step `b`'s conclusion, if its other supports
/// already hold before `b`; the bridge `b` can then be deleted and the
/// consumer moved to position `b`.
fn bridge_consumer(c: &CorrectChain, b: usize) -> Option<usize> {
    let users = consumers(c, b);
    let &[consumer] = users.as_slice() else { return None };
    let bridge = c.steps[b - 1].conclusion;
    let before = prefix_state(&c.base_facts, &c.steps[..b - 1]).ok()?;
    c.steps[consumer - 1].supports.iter().filter(|l| **l != bridge).all(|l| before.holds(*l)).then_some(consumer)
}

/// Injects error `e` at position `k` and recomputes the downstream steps.
pub fn inject(c: &CorrectChain, k: usize, e: ErrorType, seed: u64) -> Result<ErroneousChain> {
    inject_with(c, k, e, seed, false)
}

pub fn inject_with(c: &CorrectChain, k: usize, e: ErrorType, seed: u64, allow_step_drop: bool) -> Result<ErroneousChain> {
    if !applicable_errors(c, k).contains(&e) {
        return Err(Error::InjectionInfeasible(format!("{e} does not apply at step {k}")));
    }
    let mut rng = rng_from_seed(seed);
    let n = c.steps.len();
    let step = &c.steps[k - 1];
    let prefix: Vec<Step> = c.steps[..k - 1].to_vec();
    // (1-based original index, step) of the steps to re-derive after k.
    let mut rest: Vec<(usize, &Step)> = (k + 1..=n).map(|i| (i, &c.steps[i - 1])).collect();

    let corrupted = match e.group() {
        ErrorGroup::TruthState => {
            let mut supports = step.supports.clone();
            if e == ErrorType::VacuousTruthError {
                // Falsify the antecedent: slot A is premise 0 of every
                // forward implication pattern.
                supports[0] = supports[0].negated();
            }
            let wrong = step.conclusion.negated();
            if wrong == step.conclusion {
                return Err(Error::InjectionInfeasible(format!("{e} leaves step {k} unchanged")));
            }
            Step::new(supports, step.rule.clone(), wrong)
        }
        ErrorGroup::Structural => match e {
            ErrorType::ConverseError => {
                let support = *step.supports.first().ok_or_else(|| Error::InjectionInfeasible("no support".into()))?;
                Step::new(alloc::vec![step.conclusion], step.rule.clone(), support)
            }
            ErrorType::RedundantStep => {
                let cited: Vec<usize> =
                    (1..k).filter(|&j| c.steps[..k - 1].iter().any(|s| s.cites(c.steps[j - 1].conclusion))).collect();
                let pool: Vec<usize> = if cited.is_empty() { (1..k).collect() } else { cited };
                let j = *pool.choose(&mut rng).expect("k >= 2");
                rest.insert(0, (k, step));
                c.steps[j - 1].clone()
            }
            ErrorType::MissingPrerequisite => {
                let consumer = bridge_consumer(c, k).expect("applicability checked");
                let bridge = step.conclusion;
                let target = &c.steps[consumer - 1];
                rest.retain(|(i, _)| *i != consumer);
                let supports: Vec<Literal> = target.supports.iter().copied().filter(|l| *l != bridge).collect();
                Step::new(supports, target.rule.clone(), target.conclusion)
            }
            ErrorType::CircularReference => {
                let js = consumers(c, k);
                let j = *js.choose(&mut rng).expect("applicability checked");
                let later = &c.steps[j - 1];
                let mut supports = alloc::vec![later.conclusion];
                supports.extend(later.supports.iter().copied().filter(|l| *l != step.conclusion));
                Step::new(supports, later.rule.clone(), step.conclusion)
            }
            _ => unreachable!("truth-state types handled above"),
        },
    };

    let down = recompute_downstream(&c.base_facts, &prefix, &corrupted, &rest, allow_step_drop)?;
    let mut steps = prefix;
    steps.push(corrupted);
    steps.extend(down.steps);
    let mut out = ErroneousChain::new(&c.base_facts, steps, k, e)?;
    out.dropped_steps = down.dropped;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Downstream {
    pub steps: Vec<Step>,
    /// Original indices of dropped steps.
    pub dropped: Vec<usize>,
}

/// Re-derives each remaining original step toward its target fact under the
/// counterfactual state. The original pattern and supports are kept when
/// they still hold; otherwise the rule's other patterns for that fact are
/// tried in catalog order. A step with no applicable pattern is an error,
/// or is dropped when `allow_step_drop` is set.
pub fn recompute_downstream(
    base_facts: &[Literal],
    prefix: &[Step],
    corrupted: &Step,
    originals: &[(usize, &Step)],
    allow_step_drop: bool,
) -> Result<Downstream> {
    let mut state = corrupted_state(base_facts, prefix, corrupted)?;
    let mut out = Downstream::default();
    for &(index, orig) in originals {
        let target = orig.conclusion.fact;
        // A re-derivation may repeat the value the state already holds for
        // the target (a circular rewrite asserts it early) but never
        // contradict it.
        let agrees = |lit: Literal| state.value(target).is_none_or(|v| v == lit.value);
        let derived = if step_pattern(orig).is_some()
            && orig.supports.iter().all(|l| state.holds(*l))
            && agrees(orig.conclusion)
        {
            Some(orig.clone())
        } else {
            licensed_patterns(&orig.rule)
                .iter()
                .filter(|p| p.derived_fact(&orig.rule) == target)
                .filter_map(|p| {
                    p.apply(&orig.rule, &state).map(|lit| Step::new(p.premise_literals(&orig.rule), orig.rule.clone(), lit))
                })
                .find(|s| agrees(s.conclusion))
        };
        match derived {
            Some(s) => {
                state.overwrite(s.conclusion);
                out.steps.push(s);
            }
            None if allow_step_drop => out.dropped.push(index),
            None => return Err(Error::DownstreamStuck(index)),
        }
    }
    Ok(out)
}

/// Outcome of the first-error checks for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FirstErrorReport {
    pub failures: Vec<String>,
    /// Set when the only failure is that a truth-state corruption is still
    /// derivable from the prefix.
    pub still_derivable: bool,
}

impl FirstErrorReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Re-checks every first-error property of an instance from its steps
/// alone.
pub fn verify_first_error(inst: &Instance) -> FirstErrorReport {
    let mut failures: Vec<String> = Vec::new();
    let mut still_derivable = false;
    let c = &inst.correct;
    let err = &inst.erroneous;
    let k = err.k;
    let e = err.error_type;

    let chain_rep = verify_chain(c);
    if !chain_rep.is_valid() {
        failures.push(format!("correct chain invalid: {}", chain_rep.failures.join("; ")));
        return FirstErrorReport { failures, still_derivable: false };
    }
    if k < 1 || k > err.steps.len() || k > c.steps.len() + 1 {
        failures.push(format!("k={k} outside the erroneous chain of {} steps", err.steps.len()));
        return FirstErrorReport { failures, still_derivable: false };
    }
    let expected_len = c.steps.len() as isize + e.length_delta() - err.dropped_steps.len() as isize;
    if err.steps.len() as isize != expected_len {
        failures.push(format!("erroneous chain has {} steps, expected {expected_len}", err.steps.len()));
    }

    // (1) shared prefix
    if err.steps[..k - 1] != c.steps[..k - 1] {
        failures.push("erroneous prefix differs from the correct chain".into());
    }

    let theory = match c.theory() {
        Ok(t) => t,
        Err(x) => {
            failures.push(format!("theory: {x}"));
            return FirstErrorReport { failures, still_derivable: false };
        }
    };

    // (2) prefix validity and (6) invalidity of step k
    match PrefixWalker::new(&theory, &c.base_facts) {
        Ok(mut w) => {
            for (i, s) in err.steps[..k].iter().enumerate() {
                match w.assess(s) {
                    Ok(a) if i + 1 < k && !a.is_valid() => failures.push(format!("prefix step {} is not valid", i + 1)),
                    Ok(a) if i + 1 == k && a.is_valid() => failures.push(format!("step {k} is valid")),
                    Ok(_) => {}
                    Err(x) => failures.push(format!("step {}: {x}", i + 1)),
                }
                w.push(s);
            }
        }
        Err(x) => failures.push(format!("base facts: {x}")),
    }

    let step_k = &err.steps[k - 1];
    let pk = match prefix_state(&c.base_facts, &err.steps[..k - 1]) {
        Ok(s) => s,
        Err(x) => {
            failures.push(format!("prefix state: {x}"));
            return FirstErrorReport { failures, still_derivable: false };
        }
    };

    match e.group() {
        // (3) non-derivability
        ErrorGroup::TruthState => match entails(&theory, &pk, step_k.conclusion) {
            Ok(r) if r.status == EntailmentStatus::NotEntailed => {}
            Ok(r) if r.status == EntailmentStatus::Entailed => {
                failures.push(format!("corrupted conclusion {} is still derivable", step_k.conclusion));
                still_derivable = true;
            }
            Ok(_) => failures.push("prefix state is inconsistent".into()),
            Err(x) => failures.push(format!("entailment: {x}")),
        },
        // (4) structural predicates
        ErrorGroup::Structural => {
            let ok = match e {
                ErrorType::ConverseError => {
                    matching_pattern(&step_k.rule, &step_k.supports, step_k.conclusion).is_none()
                        && converse_patterns(&step_k.rule).iter().any(|p| p.matches(&step_k.rule, &step_k.supports, step_k.conclusion))
                }
                ErrorType::RedundantStep => pk.holds(step_k.conclusion),
                ErrorType::MissingPrerequisite => licensed_patterns(&step_k.rule).iter().any(|p| {
                    let premises = p.premise_literals(&step_k.rule);
                    p.derived_literal(&step_k.rule) == step_k.conclusion
                        && step_k.supports.iter().all(|s| premises.contains(s))
                        && premises.iter().any(|l| !pk.holds(*l))
                }),
                ErrorType::CircularReference => err.steps[k..]
                    .iter()
                    .any(|later| step_k.cites(later.conclusion) && later.cites(step_k.conclusion)),
                _ => unreachable!(),
            };
            if !ok {
                failures.push(format!("structural check for {e} failed at step {k}"));
            }
        }
    }

    // (5) downstream coherence under the running counterfactual state
    match corrupted_state(&c.base_facts, &err.steps[..k - 1], step_k) {
        Ok(mut state) => {
            for (i, s) in err.steps[k..].iter().enumerate() {
                let t = k + 1 + i;
                let licensed = matching_pattern(&s.rule, &s.supports, s.conclusion).is_some();
                if !licensed || !s.supports.iter().all(|l| state.holds(*l)) || !theory.rules().contains(&s.rule) {
                    failures.push(format!("downstream step {t} is not pattern-consistent"));
                }
                state.overwrite(s.conclusion);
            }
        }
        Err(x) => failures.push(format!("counterfactual state: {x}")),
    }

    // final step targets the goal fact
    if err.steps.last().map(|s| s.conclusion.fact) != Some(c.goal.fact) {
        failures.push("erroneous chain does not end on the goal fact".into());
    }
    let still_derivable = still_derivable && failures.len() == 1;
    FirstErrorReport { failures, still_derivable }
}

/// Which positions `k` may be sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KRange {
    /// Positions `2..=T-1`, excluding the first and last steps.
    Interior,
    /// Explicit inclusive range, clipped to the chain.
    Explicit { min: usize, max: usize },
}

impl KRange {
    pub fn positions(self, len: usize) -> core::ops::RangeInclusive<usize> {
        match self {
            KRange::Interior => 2..=len.saturating_sub(1),
            KRange::Explicit { min, max } => min.max(1)..=max.min(len),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectionConfig {
    pub k_range: KRange,
    pub max_attempts: usize,
    pub allow_step_drop: bool,
    pub weights: ErrorWeights,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        InjectionConfig {
            k_range: KRange::Interior,
            max_attempts: 1000,
            allow_step_drop: false,
            weights: ErrorWeights::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RejectReason {
    Infeasible,
    NoApplicablePosition,
    DownstreamStuck,
    StillDerivable,
    VerificationFailed,
    SynthesisExhausted,
}

impl RejectReason {
    pub const ALL: [RejectReason; 6] = [
        RejectReason::Infeasible,
        RejectReason::NoApplicablePosition,
        RejectReason::DownstreamStuck,
        RejectReason::StillDerivable,
        RejectReason::VerificationFailed,
        RejectReason::SynthesisExhausted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RejectReason::Infeasible => "infeasible",
            RejectReason::NoApplicablePosition => "no_applicable_position",
            RejectReason::DownstreamStuck => "downstream_stuck",
            RejectReason::StillDerivable => "still_derivable",
            RejectReason::VerificationFailed => "verification_failed",
            RejectReason::SynthesisExhausted => "synthesis_exhausted",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of sampling one instance: the instance (if any attempt succeeded)
/// and a count of rejections by reason.
#[derive(Debug, Clone, Default)]
pub struct Sampled {
    pub instance: Option<Instance>,
    /// Chains synthesized, including the accepted one.
    pub attempts: usize,
    pub rejections: BTreeMap<RejectReason, usize>,
    /// Seed of the chain the instance was built from.
    pub chain_seed: u64,
}

fn reject_reason(err: &Error) -> RejectReason {
    match err {
        Error::DownstreamStuck(_) => RejectReason::DownstreamStuck,
        Error::SynthesisExhausted { .. } => RejectReason::SynthesisExhausted,
        _ => RejectReason::Infeasible,
    }
}

/// Tries to turn `c` into an instance with a fixed `(k, e)`.
pub fn try_instance(c: &CorrectChain, k: usize, e: ErrorType, seed: u64, allow_step_drop: bool) -> core::result::Result<Instance, RejectReason> {
    let erroneous = inject_with(c, k, e, seed, allow_step_drop).map_err(|x| reject_reason(&x))?;
    let inst = Instance { correct: c.clone(), erroneous };
    let rep = verify_first_error(&inst);
    if rep.is_valid() {
        Ok(inst)
    } else if rep.still_derivable {
        Err(RejectReason::StillDerivable)
    } else {
        Err(RejectReason::VerificationFailed)
    }
}

/// Samples `k` uniformly from the configured range, then `e` from the
/// weights restricted to the types applicable at `k`, and rejection-samples
/// until an instance verifies.
pub fn build_counterfactual(c: &CorrectChain, cfg: &InjectionConfig, seed: u64) -> (Option<Instance>, BTreeMap<RejectReason, usize>) {
    let mut rng = rng_from_seed(seed);
    let mut rejections = BTreeMap::new();
    for _ in 0..cfg.max_attempts {
        let positions: Vec<usize> = cfg.k_range.positions(c.steps.len()).collect();
        let Some(&k) = positions.choose(&mut rng) else {
            *rejections.entry(RejectReason::NoApplicablePosition).or_insert(0) += 1;
            continue;
        };
        let applicable = applicable_errors(c, k);
        let e = match sample_error_type_with(&cfg.weights, &applicable, &mut rng) {
            Ok(e) => e,
            Err(_) => {
                *rejections.entry(RejectReason::NoApplicablePosition).or_insert(0) += 1;
                continue;
            }
        };
        match try_instance(c, k, e, rng.next_u64(), cfg.allow_step_drop) {
            Ok(inst) => return (Some(inst), rejections),
            Err(r) => *rejections.entry(r).or_insert(0) += 1,
        }
    }
    (None, rejections)
}

/// Step range of the correct chain so that the erroneous chain of type `e`
/// stays within `min..=max` steps.
pub fn correct_length_range(e: ErrorType, min: usize, max: usize) -> (usize, usize) {
    match e.length_delta() {
        1 => (min, max.saturating_sub(1).max(min)),
        -1 => ((min + 1).min(max), max),
        _ => (min, max),
    }
}

/// Samples one corpus instance for item `index` of a corpus seeded with
/// `corpus_seed`. The error type is drawn first from the weights; chains and
/// positions are then resampled until that type can be injected and the
/// instance verifies, so accepted shares follow the weights.
pub fn sample_instance(
    synth: &SynthesisConfig,
    inj: &InjectionConfig,
    corpus_seed: u64,
    index: u64,
) -> Sampled {
    let mut rng: Rng = rng_from_seed(derive_seed(corpus_seed, index));
    let mut out = Sampled::default();
    let all: BTreeSet<ErrorType> = ErrorType::ALL.into_iter().collect();
    let Ok(e) = sample_error_type_with(&inj.weights, &all, &mut rng) else { return out };
    let (lo, hi) = correct_length_range(e, synth.min_steps, synth.max_steps);
    let synth = synth.with_steps(lo, hi);

    for _ in 0..inj.max_attempts {
        out.attempts += 1;
        let chain_seed = rng.next_u64();
        let chain = match synthesize_chain_counted(&synth, chain_seed) {
            Ok(s) => s.chain,
            Err(x) => {
                *out.rejections.entry(reject_reason(&x)).or_insert(0) += 1;
                continue;
            }
        };
        let mut positions: Vec<usize> =
            inj.k_range.positions(chain.steps.len()).filter(|&k| applicable_errors(&chain, k).contains(&e)).collect();
        if positions.is_empty() {
            *out.rejections.entry(RejectReason::NoApplicablePosition).or_insert(0) += 1;
            continue;
        }
        // Positions are tried in random order, so the accepted k is uniform
        // over the positions of this chain that work.
        positions.shuffle(&mut rng);
        for k in positions {
            let inject_seed = rng.gen::<u64>();
            match try_instance(&chain, k, e, inject_seed, inj.allow_step_drop) {
                Ok(inst) => {
                    out.instance = Some(inst);
                    out.chain_seed = chain_seed;
                    return out;
                }
                Err(r) => *out.rejections.entry(r).or_insert(0) += 1,
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use alloc::string::ToString;

    #[test]
    fn error_type_names_round_trip() {
        for e in ErrorType::ALL {
            assert_eq!(e.name().parse::<ErrorType>().unwrap(), e);
        }
        let structural: Vec<_> = ErrorType::ALL.into_iter().filter(|e| e.group() == ErrorGroup::Structural).collect();
        assert_eq!(
            structural,
            [ErrorType::ConverseError, ErrorType::RedundantStep, ErrorType::MissingPrerequisite, ErrorType::CircularReference]
        );
    }

    #[test]
    fn example_b_xor_as_equiv() {
        let c = fixtures::example_b_correct();
        let err = inject(&c, 7, ErrorType::XorAsEquiv, 0).unwrap();
        assert_eq!(err.steps.len(), 7);
        assert_eq!(err.steps[6].conclusion.to_string(), "[F1]=False");
        assert_eq!(err, fixtures::example_b().erroneous);
    }

    #[test]
    fn example_a_missing_prerequisite() {
        let c = fixtures::example_a_correct();
        assert!(applicable_errors(&c, 4).contains(&ErrorType::MissingPrerequisite));
        let err = inject(&c, 4, ErrorType::MissingPrerequisite, 0).unwrap();
        assert_eq!(err, fixtures::example_a().erroneous);
    }

    #[test]
    fn applicability_examples() {
        let b = fixtures::example_b_correct();
        // step 3: [F6] xor [F8] used backward
        let at3 = applicable_errors(&b, 3);
        assert!(at3.contains(&ErrorType::XorAsEquiv));
        assert!(!at3.contains(&ErrorType::OrAndConfusion));
        let a = fixtures::example_a_correct();
        assert!(!applicable_errors(&a, 1).contains(&ErrorType::MissingPrerequisite));
        assert!(!applicable_errors(&a, 1).contains(&ErrorType::RedundantStep));
    }

    #[test]
    fn drop_condition_card() {
        use crate::logic::parse_literal;
        let c = fixtures::drop_condition_chain();
        let k = c.steps.iter().position(|s| s.rule.to_string() == "[F2] -> ([F6] and [F7])").unwrap() + 1;
        let err = inject(&c, k, ErrorType::DropCondition, 0).unwrap();
        assert_eq!(err.steps[k - 1].conclusion, parse_literal("[F2]=True").unwrap());
    }

    #[test]
    fn generated_instances_verify() {
        let synth = SynthesisConfig::default();
        let inj = InjectionConfig::default();
        let mut seen = BTreeSet::new();
        for i in 0..200 {
            let s = sample_instance(&synth, &inj, 11, i);
            let inst = s.instance.expect("instance");
            assert!(verify_first_error(&inst).is_valid());
            assert!((7..=10).contains(&inst.erroneous.steps.len()));
            assert!(s.attempts <= 1 + s.rejections.values().sum::<usize>());
            seen.insert(inst.error_type());
        }
        assert!(seen.len() >= 9, "{seen:?}");
    }

    #[test]
    fn build_counterfactual_is_deterministic() {
        let c = crate::chain::synthesize_chain(&SynthesisConfig::default(), 5).unwrap();
        let cfg = InjectionConfig::default();
        let (a, ra) = build_counterfactual(&c, &cfg, 9);
        let (b, rb) = build_counterfactual(&c, &cfg, 9);
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert!(a.is_some());
    }
}
