mod common;

use breakwatch::labeling::{label_subtree, needs_cross_check, SubtreeLabel, TransitionKind};
use breakwatch::treediff::DeltaKind;
use common::{label_table_mismatches, prose_label_table};
use proptest::prelude::*;

#[test]
fn all_eighteen_cells() {
    let (bad, total) = label_table_mismatches();
    assert_eq!(total, 18);
    assert_eq!(bad, 0);
}

#[test]
fn cross_check_matters_exactly_where_needed() {
    for ((k, t, _), _) in prose_label_table() {
        let differs = label_subtree(k, t, false) != label_subtree(k, t, true);
        assert_eq!(differs, needs_cross_check(k, t), "{k:?} {t:?}");
    }
}

fn kind() -> impl Strategy<Value = DeltaKind> {
    prop_oneof![Just(DeltaKind::Added), Just(DeltaKind::Removed), Just(DeltaKind::Edited)]
}

fn transition() -> impl Strategy<Value = TransitionKind> {
    prop_oneof![
        Just(TransitionKind::NoneToFixed),
        Just(TransitionKind::NoneToBreaking),
        Just(TransitionKind::BreakingToFixed)
    ]
}

proptest! {
    #[test]
    fn every_cell_agrees_with_the_table(k in kind(), t in transition(), x in any::<bool>()) {
        let want = prose_label_table().into_iter().find(|(c, _)| *c == (k, t, x)).unwrap().1;
        prop_assert_eq!(label_subtree(k, t, x), want);
    }

    #[test]
    fn only_the_breaking_list_can_break(k in kind(), x in any::<bool>()) {
        prop_assert_ne!(label_subtree(k, TransitionKind::NoneToFixed, x), SubtreeLabel::Broken);
    }
}
