mod common;

use std::collections::BTreeMap;

use breakwatch::snapshot::NodeId;
use breakwatch::synth::random_tree_pair;
use breakwatch::treediff::diff_trees;
use common::{conservation_violations, partition_of, treediff_oracle, Role};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_brute_force_on_500_pairs() {
    let run = treediff_oracle(500, 2024);
    assert_eq!(run.agree, run.pairs, "first mismatch at pair {:?}", run.first_mismatch);
    assert!(run.elapsed.as_secs_f64() < 60.0, "{:?}", run.elapsed);
    // the corpus must exercise every delta kind, not just identical trees
    assert!(run.with_edits > 50 && run.with_removals > 50 && run.with_additions > 50);
}

fn swap(side: &BTreeMap<NodeId, Role>) -> BTreeMap<NodeId, Role> {
    side.iter()
        .map(|(k, r)| {
            let r = match *r {
                Role::Removed => Role::Added,
                Role::Added => Role::Removed,
                other => other,
            };
            (*k, r)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, ..ProptestConfig::default() })]

    #[test]
    fn every_node_is_accounted_for_once(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = random_tree_pair(&mut rng, 30, 6);
        prop_assert_eq!(conservation_violations(&a, &b, &diff_trees(&a, &b)), 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2_000, ..ProptestConfig::default() })]

    #[test]
    fn swapping_arguments_swaps_the_partition(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = random_tree_pair(&mut rng, 30, 6);
        let (fa, fb) = partition_of(&diff_trees(&a, &b));
        let (ra, rb) = partition_of(&diff_trees(&b, &a));
        prop_assert_eq!(swap(&fa), rb);
        prop_assert_eq!(swap(&fb), ra);
    }

    #[test]
    fn self_diff_is_all_common(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, _) = random_tree_pair(&mut rng, 30, 6);
        let d = diff_trees(&a, &a);
        prop_assert!(d.deltas.is_empty());
        prop_assert_eq!(d.common.len(), a.nodes.len());
    }
}
