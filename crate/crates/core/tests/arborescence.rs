use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tesa_core::arborification::{break_cycles, is_acyclic, max_spanning_intree, max_spanning_intree_reference};
use tesa_core::fixtures::{self, oracle};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fast_reference_and_brute_force_agree(seed in any::<u64>(), n in 1usize..=7, p in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = fixtures::random_reachable_digraph(&mut rng, n, p);
        let fast = max_spanning_intree(&g).unwrap();
        let reference = max_spanning_intree_reference(&g).unwrap();
        fast.validate().unwrap();
        reference.validate().unwrap();
        let best = oracle::brute_force_max_intree(&g).unwrap();
        prop_assert_eq!(fast.total_weight(), best);
        prop_assert_eq!(reference.total_weight(), best);
    }

    #[test]
    fn fast_matches_reference_on_larger_graphs(seed in any::<u64>(), n in 8usize..=60, p in 0.0f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = fixtures::random_reachable_digraph(&mut rng, n, p);
        let fast = max_spanning_intree(&g).unwrap();
        let reference = max_spanning_intree_reference(&g).unwrap();
        prop_assert_eq!(fast.total_weight(), reference.total_weight());
    }

    #[test]
    fn breaking_cycles_keeps_the_sink_reachable(seed in any::<u64>(), n in 2usize..=25, p in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = fixtures::random_reachable_digraph(&mut rng, n, p);
        let (h, removed) = break_cycles(&g);
        prop_assert!(is_acyclic(&h));
        prop_assert_eq!(h.edges().len() + removed.len(), g.edges().len());
        // every removed edge sat on a cycle, so a spanning in-tree survives
        prop_assert!(max_spanning_intree(&h).is_ok());
    }
}

#[test]
fn weight_is_bounded_by_the_greedy_choice() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let g = fixtures::random_reachable_digraph(&mut rng, 12, 0.4);
        let mut best_out = vec![f64::NEG_INFINITY; g.n_nodes()];
        for e in g.edges() {
            best_out[e.source] = best_out[e.source].max(e.weight);
        }
        let bound: f64 = (0..g.n_nodes()).filter(|&v| v != g.sink()).map(|v| best_out[v]).sum();
        let tree = max_spanning_intree(&g).unwrap();
        assert!(tree.total_weight() <= bound);
        assert_eq!(tree.parents().iter().filter(|p| p.is_none()).count(), 1);
    }
}
