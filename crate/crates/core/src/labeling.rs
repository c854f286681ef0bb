//! Ground-truth labels for differential subtrees.
//!
//! A page is visited three times: with no filter list (N), with the list
//! version that broke it (B) and with the version that fixed it (F). Each
//! delta of the three diffs N→F, N→B and B→F gets one label from a fixed
//! decision table. Two cells are inconclusive on their own and consult the
//! N→F diff: a removal or edit seen in N→B, and an addition seen in B→F.

use serde::{Deserialize, Serialize};

use crate::treediff::{best_match, DeltaKind, DiffResult, DifferentialSubtree, EDIT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransitionKind {
    #[serde(rename = "N_TO_F")]
    NoneToFixed,
    #[serde(rename = "N_TO_B")]
    NoneToBreaking,
    #[serde(rename = "B_TO_F")]
    BreakingToFixed,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 3] =
        [TransitionKind::NoneToFixed, TransitionKind::NoneToBreaking, TransitionKind::BreakingToFixed];

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::NoneToFixed => "N_TO_F",
            TransitionKind::NoneToBreaking => "N_TO_B",
            TransitionKind::BreakingToFixed => "B_TO_F",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SubtreeLabel {
    Broken,
    Legitimate,
    Neutral,
}

impl SubtreeLabel {
    pub const ALL: [SubtreeLabel; 3] = [SubtreeLabel::Broken, SubtreeLabel::Legitimate, SubtreeLabel::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            SubtreeLabel::Broken => "BROKEN",
            SubtreeLabel::Legitimate => "LEGITIMATE",
            SubtreeLabel::Neutral => "NEUTRAL",
        }
    }
}

/// The decision table. `also_in_nf` only matters for REMOVED/EDITED in N→B
/// and ADDED in B→F.
pub fn label_subtree(kind: DeltaKind, transition: TransitionKind, also_in_nf: bool) -> SubtreeLabel {
    use DeltaKind::*;
    use TransitionKind::*;
    match (kind, transition) {
        (Removed | Edited, NoneToFixed | BreakingToFixed) => SubtreeLabel::Legitimate,
        (Added, NoneToFixed | NoneToBreaking) => SubtreeLabel::Neutral,
        (Removed | Edited, NoneToBreaking) => {
            if also_in_nf {
                SubtreeLabel::Legitimate
            } else {
                SubtreeLabel::Broken
            }
        }
        (Added, BreakingToFixed) => {
            if also_in_nf {
                SubtreeLabel::Neutral
            } else {
                SubtreeLabel::Broken
            }
        }
    }
}

/// Whether the cell needs the N→F cross-check.
pub fn needs_cross_check(kind: DeltaKind, transition: TransitionKind) -> bool {
    matches!(
        (kind, transition),
        (DeltaKind::Removed | DeltaKind::Edited, TransitionKind::NoneToBreaking)
            | (DeltaKind::Added, TransitionKind::BreakingToFixed)
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDelta {
    pub transition: TransitionKind,
    pub label: SubtreeLabel,
    pub also_in_nf: bool,
    pub delta: DifferentialSubtree,
}

/// Whether `delta` has an equivalent in the N→F diff.
///
/// REMOVED/EDITED deltas are looked up among N→F removals and edits,
/// ADDED deltas among N→F additions. Since N→B shares its A snapshot with
/// N→F and B→F shares its B snapshot, a shared member id settles it;
/// otherwise the delta root is matched against the N→F delta roots with the
/// edit threshold.
pub fn also_in_nf(delta: &DifferentialSubtree, diff_nf: &DiffResult) -> bool {
    let wanted = |k: DeltaKind| match delta.kind {
        DeltaKind::Added => k == DeltaKind::Added,
        DeltaKind::Removed | DeltaKind::Edited => k != DeltaKind::Added,
    };
    let pool: Vec<&DifferentialSubtree> = diff_nf.deltas.iter().filter(|d| wanted(d.kind)).collect();
    if pool.iter().any(|d| d.members.contains(&delta.root)) {
        return true;
    }
    let (_, score) = best_match(&delta.root_node, pool.iter().map(|d| &d.root_node), diff_nf.page_diag);
    score.value >= EDIT_THRESHOLD
}

pub fn label_visit_triple(diff_nf: &DiffResult, diff_nb: &DiffResult, diff_bf: &DiffResult) -> Vec<LabeledDelta> {
    let mut out = Vec::new();
    for (transition, diff) in [
        (TransitionKind::NoneToFixed, diff_nf),
        (TransitionKind::NoneToBreaking, diff_nb),
        (TransitionKind::BreakingToFixed, diff_bf),
    ] {
        for delta in &diff.deltas {
            let cross = needs_cross_check(delta.kind, transition) && also_in_nf(delta, diff_nf);
            out.push(LabeledDelta {
                transition,
                label: label_subtree(delta.kind, transition, cross),
                also_in_nf: cross,
                delta: delta.clone(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use DeltaKind::*;
    use SubtreeLabel::*;
    use TransitionKind::*;

    #[test]
    fn inconclusive_cells() {
        assert_eq!(label_subtree(Removed, NoneToBreaking, false), Broken);
        assert_eq!(label_subtree(Removed, NoneToBreaking, true), Legitimate);
        assert_eq!(label_subtree(Edited, NoneToBreaking, false), Broken);
        assert_eq!(label_subtree(Added, BreakingToFixed, true), Neutral);
        assert_eq!(label_subtree(Added, BreakingToFixed, false), Broken);
    }

    #[test]
    fn conclusive_cells_ignore_cross_check() {
        for x in [false, true] {
            assert_eq!(label_subtree(Removed, NoneToFixed, x), Legitimate);
            assert_eq!(label_subtree(Edited, BreakingToFixed, x), Legitimate);
            assert_eq!(label_subtree(Added, NoneToBreaking, x), Neutral);
            assert_eq!(label_subtree(Added, NoneToFixed, x), Neutral);
        }
    }

    #[test]
    fn transition_names() {
        assert_eq!(serde_json::to_string(&NoneToBreaking).unwrap(), "\"N_TO_B\"");
        assert_eq!(serde_json::to_string(&Broken).unwrap(), "\"BROKEN\"");
    }
}
