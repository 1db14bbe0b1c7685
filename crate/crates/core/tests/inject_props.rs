//! First-error instances: prefix sharing, non-derivability, downstream
//! coherence and the oracle judge.

use firsterr_core::chain::{prefix_state, SynthesisConfig};
use firsterr_core::eval::{Judge, JudgeContext, OracleJudge};
use firsterr_core::fixtures;
use firsterr_core::inject::{
    recompute_downstream, sample_instance, verify_first_error, ErrorGroup, ErrorType, InjectionConfig,
};
use firsterr_core::labels::{label_steps, Label, LabelStrategy};
use firsterr_core::logic::{Literal, Rule, State, TruthValue};
use firsterr_core::prover::{entails, Theory};
use firsterr_core::Error;

/// Whether `rule` plus `supports` forces `lit`, by enumerating the rule's slots.
fn forced(rule: &Rule, supports: &[Literal], lit: Literal) -> bool {
    let slots = rule.slots();
    let mut any = false;
    for bits in 0u32..(1 << slots.len()) {
        let lits: Vec<Literal> = slots.iter().enumerate().map(|(i, f)| Literal::new(*f, bits >> i & 1 == 1)).collect();
        let s = State::from_literals(&lits).unwrap();
        if rule.eval(&s) != TruthValue::True || supports.iter().any(|l| !s.holds(*l)) {
            continue;
        }
        any = true;
        if !s.holds(lit) {
            return false;
        }
    }
    any
}

#[test]
fn flipping_a_disjunct_strands_the_consumer() {
    let c = fixtures::example_a_correct();
    let mut corrupted = c.steps[4].clone();
    corrupted.conclusion = corrupted.conclusion.negated();
    let originals: Vec<_> = c.steps.iter().enumerate().skip(5).collect();
    let got = recompute_downstream(&c.base_facts, &c.steps[..4], &corrupted, &originals, false);
    // With [F3]=False and [F4]=False nothing about [F1] follows from
    // ([F3] or [F4]) -> [F1].
    let s6 = &c.steps[5];
    let cf: Vec<Literal> = s6.rule.slots().iter().filter_map(|f| {
        let st = prefix_state(&c.base_facts, &c.steps[..4]).unwrap();
        let mut st = st;
        st.overwrite(corrupted.conclusion);
        st.value(*f).map(|v| Literal::new(*f, v))
    }).collect();
    assert!(!forced(&s6.rule, &cf, s6.conclusion) && !forced(&s6.rule, &cf, s6.conclusion.negated()));
    assert_eq!(got, Err(Error::DownstreamStuck(5)));
    let dropped = recompute_downstream(&c.base_facts, &c.steps[..4], &corrupted, &originals, true).unwrap();
    assert_eq!(dropped.dropped, vec![5, 6]);
}

#[test]
fn sampled_instances_hold_every_property() {
    let synth = SynthesisConfig::default();
    let inj = InjectionConfig::default();
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..400u64 {
        let out = sample_instance(&synth, &inj, 99, i);
        let inst = out.instance.unwrap_or_else(|| panic!("item {i} exhausted: {:?}", out.rejections));
        let rep = verify_first_error(&inst);
        assert!(rep.is_valid(), "item {i}: {:?}", rep.failures);
        let (c, e, k) = (&inst.correct, &inst.erroneous, inst.k());
        seen.insert(inst.error_type());

        assert!((7..=10).contains(&e.steps.len()), "item {i} length {}", e.steps.len());
        assert!(k >= 2 && k < e.steps.len().max(c.steps.len()));
        assert_eq!(c.steps[..k - 1], e.steps[..k - 1]);

        let th = c.theory().unwrap();
        let pk = prefix_state(&c.base_facts, &c.steps[..k - 1]).unwrap();
        if inst.error_type().group() == ErrorGroup::TruthState {
            let r = entails(&th, &pk, e.steps[k - 1].conclusion).unwrap();
            assert!(!r.is_entailed(), "item {i}: corrupted conclusion still follows");
        }

        // Each downstream step's supports hold in the counterfactual state
        // and its rule forces the conclusion.
        for (j, s) in e.steps[k..].iter().enumerate() {
            let st = &e.corrupted_state_log[j];
            assert!(s.supports.iter().all(|l| st.holds(*l)), "item {i} step {}", k + j + 1);
            assert!(forced(&s.rule, &s.supports, s.conclusion), "item {i} step {}", k + j + 1);
        }

        let ctx = JudgeContext { theory: &th, base_facts: &c.base_facts, goal: c.goal };
        let good = OracleJudge.score_trajectory(&ctx, &c.steps);
        assert!(good.iter().all(|s| *s == 1.0));
        let bad = OracleJudge.score_trajectory(&ctx, &e.steps);
        assert_eq!(bad.iter().position(|s| *s < 0.5), Some(k - 1), "item {i}");

        let labels = label_steps(&inst, LabelStrategy::AllAfterError);
        assert_eq!(labels.erroneous.iter().position(|l| *l == Label::Invalid), Some(k - 1));
        assert!(labels.erroneous[k - 1..].iter().all(|l| *l == Label::Invalid));
    }
    assert_eq!(seen.len(), ErrorType::ALL.len(), "{seen:?}");
}

#[test]
fn sampling_is_deterministic() {
    let synth = SynthesisConfig::default();
    let inj = InjectionConfig::default();
    for i in 0..20 {
        assert_eq!(sample_instance(&synth, &inj, 5, i).instance, sample_instance(&synth, &inj, 5, i).instance);
    }
}

#[test]
fn theory_of_fixture_rejects_unknown_rules() {
    let inst = fixtures::example_b();
    let th = Theory::new(inst.correct.rules.clone()).unwrap();
    assert!(th.rules().len() == 7);
}
