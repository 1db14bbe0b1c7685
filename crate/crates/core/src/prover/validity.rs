//! Prefix validity of steps, walked incrementally along a chain.

use alloc::vec::Vec;

use super::{matching_pattern, Backbone, Theory};
use crate::chain::Step;
use crate::error::{Error, Result};
use crate::logic::{FactId, Literal, State};

/// The four conditions of prefix validity for one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepAssessment {
    /// Supports and conclusion are entailed by the rules plus the prefix.
    pub semantic: bool,
    /// Every support is a base fact or an earlier conclusion.
    pub established: bool,
    /// Supports and conclusion instantiate a licensed pattern of the rule.
    pub licensed: bool,
    /// The conclusion's fact is not yet established.
    pub novel: bool,
    /// The step's rule belongs to the theory.
    pub rule_known: bool,
}

impl StepAssessment {
    pub fn is_valid(&self) -> bool {
        self.semantic && self.established && self.licensed && self.novel && self.rule_known
    }
}

/// Tracks the procedurally established state while walking a chain.
#[derive(Debug, Clone)]
pub struct PrefixWalker<'a> {
    theory: &'a Theory,
    established: State,
    backbone: Option<Backbone>,
}

impl<'a> PrefixWalker<'a> {
    pub fn new(theory: &'a Theory, base_facts: &[Literal]) -> Result<Self> {
        let established = State::from_literals(base_facts).map_err(|_| Error::InconsistentPrefix)?;
        Ok(PrefixWalker { theory, established, backbone: None })
    }

    pub fn established(&self) -> &State {
        &self.established
    }

    fn backbone(&mut self) -> Result<&Backbone> {
        if self.backbone.is_none() {
            let bb = Backbone::compute(self.theory, &self.established)?;
            if !bb.is_consistent() {
                return Err(Error::InconsistentPrefix);
            }
            self.backbone = Some(bb);
        }
        Ok(self.backbone.as_ref().expect("just computed"))
    }

    /// Assesses `step` against the current prefix. Errors if the prefix is
    /// inconsistent with the rules.
    pub fn assess(&mut self, step: &Step) -> Result<StepAssessment> {
        let rule_known = self.theory.rules().contains(&step.rule);
        let established = step.supports.iter().all(|l| self.established.holds(*l));
        let novel = self.established.value(step.conclusion.fact).is_none();
        let licensed = matching_pattern(&step.rule, &step.supports, step.conclusion).is_some()
            && step.supports.iter().all(|l| step.rule.mentions(l.fact))
            && !step.supports.iter().any(|l| l.fact == step.conclusion.fact);
        let bb = self.backbone()?;
        let semantic = step.supports.iter().all(|l| bb.entails(*l)) && bb.entails(step.conclusion);
        Ok(StepAssessment { semantic, established, licensed, novel, rule_known })
    }

    /// Records the step's conclusion as established. A conclusion that
    /// contradicts the prefix replaces the earlier value.
    pub fn push(&mut self, step: &Step) {
        if !self.established.holds(step.conclusion) {
            self.established.overwrite(step.conclusion);
            self.backbone = None;
        }
    }

    /// Assesses every step in order, pushing each. Stops at the first
    /// inconsistent prefix and reports it as an error.
    pub fn assess_all(mut self, steps: &[Step]) -> Result<Vec<StepAssessment>> {
        let mut out = Vec::with_capacity(steps.len());
        for s in steps {
            out.push(self.assess(s)?);
            self.push(s);
        }
        Ok(out)
    }

    pub fn facts(&self) -> impl Iterator<Item = FactId> + '_ {
        self.established.facts()
    }
}
