//! Parser, renderer and three-valued evaluation properties.

use firsterr_core::logic::{parse_expr, parse_literal, parse_rule, Expr, FactId, Literal, Rule, RuleTemplate, State, TruthValue};
use proptest::prelude::*;

fn all_trees(leaves: usize, atoms: u32) -> Vec<Expr> {
    if leaves == 1 {
        return (0..atoms).map(Expr::atom).collect();
    }
    let mut out = Vec::new();
    for split in 1..leaves {
        let left = all_trees(split, atoms);
        let right = all_trees(leaves - split, atoms);
        for l in &left {
            for r in &right {
                out.push(Expr::and(l.clone(), r.clone()));
                out.push(Expr::or(l.clone(), r.clone()));
                out.push(Expr::xor(l.clone(), r.clone()));
            }
        }
    }
    out
}

fn truth(e: &Expr, bits: u32) -> bool {
    match e {
        Expr::Atom(f) => bits >> f.0 & 1 == 1,
        Expr::And(l, r) => truth(l, bits) && truth(r, bits),
        Expr::Or(l, r) => truth(l, bits) || truth(r, bits),
        Expr::Xor(l, r) => truth(l, bits) != truth(r, bits),
    }
}

#[test]
fn exhaustive_small_expressions_match_truth_tables() {
    let mut n = 0;
    for leaves in 1..=4 {
        for e in all_trees(leaves, 4) {
            let text = e.to_string();
            assert_eq!(parse_expr(&text).unwrap(), e, "{text}");
            for bits in 0u32..16 {
                let s = State::from_literals(&(0..4).map(|f| Literal::new(FactId(f), bits >> f & 1 == 1)).collect::<Vec<_>>())
                    .unwrap();
                assert_eq!(e.eval(&s), TruthValue::from(truth(&e, bits)), "{text} at {bits:04b}");
            }
            n += 1;
        }
    }
    assert_eq!(n, 4 + 3 * 16 + 2 * 9 * 64 + 5 * 27 * 256);
}

#[test]
fn precedence_and_associativity() {
    let cases = [
        ("[F0] or [F1] and [F2]", "([F0] or ([F1] and [F2]))"),
        ("[F0] and [F1] xor [F2]", "([F0] and ([F1] xor [F2]))"),
        ("[F0] xor [F1] xor [F2]", "(([F0] xor [F1]) xor [F2])"),
        ("[F0] or [F1] or [F2]", "(([F0] or [F1]) or [F2])"),
        ("([F0] or [F1]) and [[F2]]", "(([F0] or [F1]) and [F2])"),
    ];
    for (src, want) in cases {
        assert_eq!(parse_expr(src).unwrap().to_string(), want);
    }
}

#[test]
fn syntax_errors_carry_offsets() {
    for (src, at) in [("([F3] xor", 9), ("[F1] and", 8), ("[G1]", 0), ("[F0] [F1]", 5)] {
        match parse_expr(src) {
            Err(firsterr_core::Error::Syntax { offset, .. }) => assert_eq!(offset, at, "{src}"),
            other => panic!("{src}: {other:?}"),
        }
    }
    assert!(parse_literal("[F1]=Maybe").is_err());
    assert!(parse_rule("[F0] and [F1]").is_err());
    assert!(parse_rule("([F0] and [F1]) -> ([F2] or [F3])").is_err());
}

fn tv() -> impl Strategy<Value = TruthValue> {
    prop_oneof![Just(TruthValue::False), Just(TruthValue::Unknown), Just(TruthValue::True)]
}

fn info_le(a: TruthValue, b: TruthValue) -> bool {
    a == TruthValue::Unknown || a == b
}

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = (0u32..5).prop_map(Expr::atom);
    leaf.prop_recursive(4, 16, 2, |inner| {
        (inner.clone(), inner, 0..3u8).prop_map(|(l, r, op)| match op {
            0 => Expr::and(l, r),
            1 => Expr::or(l, r),
            _ => Expr::xor(l, r),
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rules_round_trip(t in 0usize..7, a in 0u32..40, b in 0u32..40, c in 0u32..40) {
        let t = RuleTemplate::ALL[t];
        let facts = [FactId(a), FactId(b), FactId(c)];
        prop_assume!(a != b && b != c && a != c);
        let r = Rule::instantiate(t, &facts[..t.arity()]).unwrap();
        let text = r.to_string();
        let back = parse_rule(&text).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(back.to_string(), text);
        prop_assert_eq!(back.template(), t);
    }

    #[test]
    fn kleene_tables(a in tv(), b in tv()) {
        prop_assert_eq!(a.and(b), a.min(b));
        prop_assert_eq!(a.or(b), a.max(b));
        prop_assert_eq!(!a.and(b), (!a).or(!b));
        prop_assert_eq!(a.xor(b), b.xor(a));
    }

    #[test]
    fn evaluation_is_monotone_in_information(e in expr_strategy(), partial in prop::collection::vec(0u8..3, 5), fill in prop::collection::vec(any::<bool>(), 5)) {
        let mut small = State::new();
        let mut big = State::new();
        for f in 0..5u32 {
            let i = f as usize;
            match partial[i] {
                0 => { small.assign(Literal::new(FactId(f), false)).unwrap(); big.assign(Literal::new(FactId(f), false)).unwrap(); }
                1 => { small.assign(Literal::new(FactId(f), true)).unwrap(); big.assign(Literal::new(FactId(f), true)).unwrap(); }
                _ => { big.assign(Literal::new(FactId(f), fill[i])).unwrap(); }
            }
        }
        prop_assert!(info_le(e.eval(&small), e.eval(&big)));
        let text = e.to_string();
        prop_assert_eq!(parse_expr(&text).unwrap(), e);
    }

    #[test]
    fn literals_round_trip(f in 0u32..1000, v in any::<bool>()) {
        let l = Literal::new(FactId(f), v);
        prop_assert_eq!(parse_literal(&l.to_string()).unwrap(), l);
    }
}
