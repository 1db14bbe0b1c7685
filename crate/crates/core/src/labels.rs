//! Step labels and weighted error-type sampling.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::inject::{ErrorType, Instance};
use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Valid,
    Invalid,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Valid => "valid",
            Label::Invalid => "invalid",
        }
    }

    pub fn is_valid(self) -> bool {
        self == Label::Valid
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valid" => Ok(Label::Valid),
            "invalid" => Ok(Label::Invalid),
            _ => Err(Error::Config(format!("unknown label `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LabelStrategy {
    /// The first corrupted step and every later step are invalid.
    #[default]
    AllAfterError,
}

impl FromStr for LabelStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all_after_error" => Ok(LabelStrategy::AllAfterError),
            _ => Err(Error::Config(format!("unknown labeling strategy `{s}`"))),
        }
    }
}

impl fmt::Display for LabelStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("all_after_error")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceLabels {
    pub correct: Vec<Label>,
    pub erroneous: Vec<Label>,
}

/// Labels both chains of an instance.
pub fn label_steps(inst: &Instance, strategy: LabelStrategy) -> InstanceLabels {
    match strategy {
        LabelStrategy::AllAfterError => InstanceLabels {
            correct: alloc::vec![Label::Valid; inst.correct.steps.len()],
            erroneous: all_after_error(inst.erroneous.steps.len(), inst.erroneous.k),
        },
    }
}

/// `n` labels, valid before the 1-based position `k` and invalid from it on.
pub fn all_after_error(n: usize, k: usize) -> Vec<Label> {
    (1..=n).map(|t| if t < k { Label::Valid } else { Label::Invalid }).collect()
}

/// Non-negative sampling weight per error type.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorWeights(BTreeMap<ErrorType, f64>);

/// Counts of the published 20k error-type distribution.
pub const PUBLISHED_COUNTS: [(ErrorType, u32); 11] = [
    (ErrorType::XorAsEquiv, 3610),
    (ErrorType::XorAsOr, 3609),
    (ErrorType::OrAndConfusion, 3598),
    (ErrorType::DropCondition, 1934),
    (ErrorType::ImplicationMisuse, 1466),
    (ErrorType::ConverseError, 1299),
    (ErrorType::RedundantStep, 1185),
    (ErrorType::CircularReference, 946),
    (ErrorType::PartialEvaluation, 913),
    (ErrorType::MissingPrerequisite, 869),
    (ErrorType::VacuousTruthError, 571),
];

impl Default for ErrorWeights {
    fn default() -> Self {
        ErrorWeights(PUBLISHED_COUNTS.iter().map(|(e, n)| (*e, f64::from(*n))).collect())
    }
}

impl ErrorWeights {
    /// Weights covering all eleven types; rejects negative or non-finite
    /// values, missing types and an all-zero table.
    pub fn new(weights: BTreeMap<ErrorType, f64>) -> Result<Self> {
        for e in ErrorType::ALL {
            match weights.get(&e) {
                None => return Err(Error::Config(format!("missing weight for {e}"))),
                Some(w) if !w.is_finite() || *w < 0.0 => {
                    return Err(Error::Config(format!("weight for {e} must be finite and non-negative")))
                }
                _ => {}
            }
        }
        if weights.values().all(|w| *w == 0.0) {
            return Err(Error::Config("all error weights are zero".into()));
        }
        Ok(ErrorWeights(weights))
    }

    pub fn uniform() -> Self {
        ErrorWeights(ErrorType::ALL.iter().map(|e| (*e, 1.0)).collect())
    }

    /// A named preset: `default` (published counts) or `uniform`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "default" => Some(ErrorWeights::default()),
            "uniform" => Some(ErrorWeights::uniform()),
            _ => None,
        }
    }

    pub fn get(&self, e: ErrorType) -> f64 {
        self.0.get(&e).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ErrorType, f64)> + '_ {
        self.0.iter().map(|(e, w)| (*e, *w))
    }

    /// Normalized share per type.
    pub fn shares(&self) -> BTreeMap<ErrorType, f64> {
        let total: f64 = self.0.values().sum();
        self.0.iter().map(|(e, w)| (*e, w / total)).collect()
    }
}

/// Categorical draw over `applicable` proportional to `weights`.
pub fn sample_error_type(weights: &ErrorWeights, applicable: &BTreeSet<ErrorType>, seed: u64) -> Result<ErrorType> {
    sample_error_type_with(weights, applicable, &mut rng_from_seed(seed))
}

pub fn sample_error_type_with(weights: &ErrorWeights, applicable: &BTreeSet<ErrorType>, rng: &mut Rng) -> Result<ErrorType> {
    let pool: Vec<(ErrorType, f64)> =
        applicable.iter().map(|e| (*e, weights.get(*e))).filter(|(_, w)| *w > 0.0).collect();
    let total: f64 = pool.iter().map(|(_, w)| w).sum();
    if pool.is_empty() || total <= 0.0 {
        return Err(Error::EmptyApplicable);
    }
    let mut u = rng.gen::<f64>() * total;
    for (e, w) in &pool {
        if u < *w {
            return Ok(*e);
        }
        u -= w;
    }
    Ok(pool[pool.len() - 1].0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_counts_total() {
        assert_eq!(PUBLISHED_COUNTS.iter().map(|(_, n)| n).sum::<u32>(), 20_000);
        let shares = ErrorWeights::default().shares();
        assert!((shares.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn labels_boundaries() {
        use Label::*;
        assert_eq!(all_after_error(6, 4), [Valid, Valid, Valid, Invalid, Invalid, Invalid]);
        assert_eq!(all_after_error(5, 5).iter().filter(|l| **l == Invalid).count(), 1);
    }

    #[test]
    fn single_applicable_type() {
        let only: BTreeSet<ErrorType> = [ErrorType::ConverseError].into_iter().collect();
        for seed in 0..50 {
            assert_eq!(sample_error_type(&ErrorWeights::default(), &only, seed).unwrap(), ErrorType::ConverseError);
        }
    }

    #[test]
    fn empty_applicable_is_an_error() {
        assert_eq!(sample_error_type(&ErrorWeights::default(), &BTreeSet::new(), 0), Err(Error::EmptyApplicable));
        let mut w: BTreeMap<ErrorType, f64> = ErrorType::ALL.iter().map(|e| (*e, 1.0)).collect();
        w.insert(ErrorType::XorAsOr, 0.0);
        let only: BTreeSet<ErrorType> = [ErrorType::XorAsOr].into_iter().collect();
        assert!(sample_error_type(&ErrorWeights::new(w).unwrap(), &only, 0).is_err());
    }

    #[test]
    fn weight_validation() {
        let mut w: BTreeMap<ErrorType, f64> = ErrorType::ALL.iter().map(|e| (*e, 1.0)).collect();
        assert!(ErrorWeights::new(w.clone()).is_ok());
        w.insert(ErrorType::XorAsOr, -1.0);
        assert!(ErrorWeights::new(w.clone()).is_err());
        w.remove(&ErrorType::XorAsOr);
        assert!(ErrorWeights::new(w).is_err());
        assert!(ErrorWeights::preset("nope").is_none());
    }
}
