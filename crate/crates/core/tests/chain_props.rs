//! Chain synthesis and dependency ordering.

use std::collections::BTreeSet;

use firsterr_core::chain::{
    dependency_edges, synthesize_chain, topological_order_steps, verify_chain, SynthesisConfig,
};
use firsterr_core::logic::RuleTemplate;
use firsterr_core::rng::rng_from_seed;
use firsterr_core::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;

/// Cycle detection by plain recursive DFS with colors.
fn has_cycle(n: usize, edges: &[(usize, usize)]) -> bool {
    fn visit(u: usize, adj: &[Vec<usize>], color: &mut [u8]) -> bool {
        color[u] = 1;
        for &v in &adj[u] {
            if color[v] == 1 || (color[v] == 0 && visit(v, adj, color)) {
                return true;
            }
        }
        color[u] = 2;
        false
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    let mut color = vec![0u8; n];
    (0..n).any(|u| color[u] == 0 && visit(u, &adj, &mut color))
}

#[test]
fn thousand_chains_verify() {
    let cfg = SynthesisConfig::default();
    let mut templates = BTreeSet::new();
    for seed in 0..1000 {
        let c = synthesize_chain(&cfg, seed).unwrap();
        let rep = verify_chain(&c);
        assert!(rep.is_valid(), "seed {seed}: {:?}", rep.failures);
        assert!((7..=10).contains(&c.steps.len()));
        assert_eq!(c.steps.last().unwrap().conclusion, c.goal);
        let concl: BTreeSet<_> = c.steps.iter().map(|s| s.conclusion.fact).collect();
        assert_eq!(concl.len(), c.steps.len());
        assert!(c.base_facts.iter().all(|l| !concl.contains(&l.fact)));
        templates.extend(c.steps.iter().map(|s| s.rule.template()));
    }
    assert_eq!(templates.len(), RuleTemplate::ALL.len());
}

#[test]
fn step_count_bounds_are_respected() {
    for (lo, hi) in [(3, 3), (5, 6), (12, 12)] {
        let cfg = SynthesisConfig { max_facts: 24, ..SynthesisConfig::default() }.with_steps(lo, hi);
        for seed in 0..50 {
            let c = synthesize_chain(&cfg, seed).unwrap();
            assert!((lo..=hi).contains(&c.steps.len()));
            assert!(verify_chain(&c).is_valid());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shuffled_chains_are_reordered(seed in any::<u64>()) {
        let c = synthesize_chain(&SynthesisConfig::default(), seed).unwrap();
        let mut steps = c.steps.clone();
        steps.shuffle(&mut rng_from_seed(seed ^ 1));
        let order = topological_order_steps(&steps).unwrap();
        let mut seen = BTreeSet::new();
        let edges = dependency_edges(&steps);
        for &i in &order {
            for &(a, b) in &edges {
                if a == i {
                    prop_assert!(seen.contains(&b), "step {i} before its dependency {b}");
                }
            }
            seen.insert(i);
        }
        prop_assert_eq!(seen.len(), steps.len());
        prop_assert!(!has_cycle(steps.len(), &edges));
    }

    #[test]
    fn cycles_are_reported(seed in any::<u64>()) {
        let c = synthesize_chain(&SynthesisConfig::default(), seed).unwrap();
        let mut steps = c.steps.clone();
        // Make the first step depend on the last one.
        let last = steps.last().unwrap().conclusion;
        steps[0].supports.push(last);
        let edges = dependency_edges(&steps);
        let cyclic = has_cycle(steps.len(), &edges);
        match topological_order_steps(&steps) {
            Err(Error::Cycle(members)) => {
                prop_assert!(cyclic);
                prop_assert!(members.contains(&0));
            }
            Ok(_) => prop_assert!(!cyclic),
            Err(e) => prop_assert!(false, "unexpected {e:?}"),
        }
    }
}
