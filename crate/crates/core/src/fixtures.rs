//! Hand-encoded reference instances.
//!
//! `example_a` is a seven-step chain whose erroneous twin omits the bridge
//! step deriving `[F5]=True` (missing prerequisite at k=4, six steps).
//! `example_b` is a seven-step chain whose final xor step is corrupted into
//! an equivalence (k=7, `[F1]=False` instead of `[F1]=True`).

use alloc::vec::Vec;

use crate::chain::{CorrectChain, Step};
use crate::inject::{ErroneousChain, ErrorType, Instance};
use crate::logic::{parse_literal, parse_rule, Literal};

fn lit(text: &str) -> Literal {
    parse_literal(text).expect("fixture literal")
}

fn lits(texts: &[&str]) -> Vec<Literal> {
    texts.iter().map(|t| lit(t)).collect()
}

fn step(rule: &str, supports: &[&str], conclusion: &str) -> Step {
    Step::new(lits(supports), parse_rule(rule).expect("fixture rule"), lit(conclusion))
}

fn chain(base: &[&str], steps: Vec<Step>, goal: &str) -> CorrectChain {
    let rules = steps.iter().map(|s| s.rule.clone()).collect();
    CorrectChain { base_facts: lits(base), rules, steps, goal: lit(goal) }
}

pub fn example_a_correct() -> CorrectChain {
    chain(
        &["[F12]=False", "[F11]=True", "[F7]=True", "[F6]=False", "[F4]=False", "[F2]=False"],
        alloc::vec![
            step("[F9] xor [F12]", &["[F12]=False"], "[F9]=True"),
            step("[F11] xor [F10]", &["[F11]=True"], "[F10]=False"),
            step("([F9] and [F8]) -> [F10]", &["[F9]=True", "[F10]=False"], "[F8]=False"),
            step("[F7] -> ([F8] or [F5])", &["[F7]=True", "[F8]=False"], "[F5]=True"),
            step("([F3] xor [F5]) -> [F6]", &["[F5]=True", "[F6]=False"], "[F3]=True"),
            step("([F3] or [F4]) -> [F1]", &["[F3]=True", "[F4]=False"], "[F1]=True"),
            step("([F0] and [F1]) -> [F2]", &["[F1]=True", "[F2]=False"], "[F0]=False"),
        ],
        "[F0]=False",
    )
}

pub fn example_a() -> Instance {
    let correct = example_a_correct();
    let mut steps: Vec<Step> = correct.steps[..3].to_vec();
    steps.push(step("([F3] xor [F5]) -> [F6]", &["[F6]=False"], "[F3]=True"));
    steps.extend(correct.steps[5..].iter().cloned());
    let erroneous = ErroneousChain::new(&correct.base_facts, steps, 4, ErrorType::MissingPrerequisite)
        .expect("fixture chain");
    Instance { correct, erroneous }
}

pub fn example_b_correct() -> CorrectChain {
    chain(
        &["[F10]=True", "[F9]=False", "[F7]=False", "[F5]=False"],
        alloc::vec![
            step("[F10] -> ([F11] and [F8])", &["[F10]=True"], "[F8]=True"),
            step("[F4] xor [F9]", &["[F9]=False"], "[F4]=True"),
            step("[F6] xor [F8]", &["[F8]=True"], "[F6]=False"),
            step("([F2] xor [F6]) -> [F7]", &["[F6]=False", "[F7]=False"], "[F2]=False"),
            step("([F4] and [F3]) -> [F5]", &["[F4]=True", "[F5]=False"], "[F3]=False"),
            step("([F2] or [F0]) -> [F3]", &["[F2]=False", "[F3]=False"], "[F0]=False"),
            step("[F0] xor [F1]", &["[F0]=False"], "[F1]=True"),
        ],
        "[F1]=True",
    )
}

pub fn example_b() -> Instance {
    let correct = example_b_correct();
    let mut steps: Vec<Step> = correct.steps[..6].to_vec();
    steps.push(step("[F0] xor [F1]", &["[F0]=False"], "[F1]=False"));
    let erroneous =
        ErroneousChain::new(&correct.base_facts, steps, 7, ErrorType::XorAsEquiv).expect("fixture chain");
    Instance { correct, erroneous }
}

/// Three-step chain whose middle step uses `[F2] -> ([F6] and [F7])`
/// backward from `[F6]=False`.
pub fn drop_condition_chain() -> CorrectChain {
    chain(
        &["[F5]=True", "[F7]=True"],
        alloc::vec![
            step("[F5] xor [F6]", &["[F5]=True"], "[F6]=False"),
            step("[F2] -> ([F6] and [F7])", &["[F6]=False"], "[F2]=False"),
            step("[F2] xor [F0]", &["[F2]=False"], "[F0]=True"),
        ],
        "[F0]=True",
    )
}
