//! Differential analysis of two DOM trees.
//!
//! Runtime DOM ids are not stable across visits, so nodes are matched by a
//! similarity heuristic over attributes and visual cues. Two nodes are
//! disqualified (score 0) when their tags differ or when their HTML `id`,
//! `src` or `name` values differ. Otherwise the score is the mean of three
//! sub-scores: text similarity (normalized LCS), class-set Jaccard and
//! screen proximity (`1 - distance / page_diagonal`, clamped).
//!
//! Matching walks both trees level by level starting at the roots. Among
//! the children of a matched pair, candidate pairs are claimed greedily by
//! descending score; a pair scoring exactly 1 joins the common tree, a pair
//! in `[0.75, 1)` is an edit, and children left unmatched become removed (A
//! side) or added (B side) subtrees. The walk continues below common and
//! edited pairs.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::snapshot::{Condition, DomNode, DomTree, NodeId, Snapshot};

/// Default lower bound for an edit match.
pub const EDIT_THRESHOLD: f64 = 0.75;

/// Characters of text compared by the LCS sub-score.
const TEXT_COMPARE_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub value: f64,
    pub disqualified: bool,
    /// All sub-scores are exactly 1. `value == 1.0` iff `exact`.
    pub exact: bool,
}

impl MatchScore {
    pub const ZERO: MatchScore = MatchScore { value: 0.0, disqualified: false, exact: false };

    fn disqualified() -> Self {
        MatchScore { value: 0.0, disqualified: true, exact: false }
    }
}

/// `2 * LCS / (|a| + |b|)` over chars; 1 for two empty strings.
pub fn text_similarity(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    let a: Vec<char> = a.chars().take(TEXT_COMPARE_LIMIT).collect();
    let b: Vec<char> = b.chars().take(TEXT_COMPARE_LIMIT).collect();
    if a.is_empty() && b.is_empty() {
        // only reachable when the untruncated strings differ past the limit
        return 1.0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ca in &a {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let lcs = prev[b.len()] as f64;
    2.0 * lcs / (a.len() + b.len()) as f64
}

/// Jaccard index of two class sets; 1 when both are empty.
pub fn class_jaccard(a: &[String], b: &[String]) -> f64 {
    let a: BTreeSet<&str> = a.iter().map(String::as_str).collect();
    let b: BTreeSet<&str> = b.iter().map(String::as_str).collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(&b).count() as f64;
    let union = a.union(&b).count() as f64;
    inter / union
}

pub fn node_similarity(a: &DomNode, b: &DomNode, page_diag: f64) -> MatchScore {
    if a.tag != b.tag
        || a.attrs.html_id != b.attrs.html_id
        || a.attrs.src != b.attrs.src
        || a.attrs.name != b.attrs.name
    {
        return MatchScore::disqualified();
    }
    let same_text = a.cues.text == b.cues.text;
    let same_classes = {
        let x: BTreeSet<&String> = a.attrs.class_list.iter().collect();
        let y: BTreeSet<&String> = b.attrs.class_list.iter().collect();
        x == y
    };
    let same_pos = a.cues.x == b.cues.x && a.cues.y == b.cues.y;
    if same_text && same_classes && same_pos {
        return MatchScore { value: 1.0, disqualified: false, exact: true };
    }
    let text = text_similarity(&a.cues.text, &b.cues.text);
    let classes = class_jaccard(&a.attrs.class_list, &b.attrs.class_list);
    let dist = (a.cues.x - b.cues.x).hypot(a.cues.y - b.cues.y);
    let diag = if page_diag > 0.0 { page_diag } else { 1.0 };
    let proximity = 1.0 - (dist / diag).clamp(0.0, 1.0);
    let mean = (text + classes + proximity) / 3.0;
    // keep 1.0 reserved for exact matches
    let value = mean.min(1.0 - f64::EPSILON / 2.0);
    MatchScore { value, disqualified: false, exact: false }
}

/// First candidate (in input order) with the maximal score.
pub fn best_match<'n>(
    a: &DomNode,
    candidates: impl IntoIterator<Item = &'n DomNode>,
    page_diag: f64,
) -> (Option<&'n DomNode>, MatchScore) {
    let mut best: (Option<&DomNode>, MatchScore) = (None, MatchScore::ZERO);
    for c in candidates {
        let s = node_similarity(a, c, page_diag);
        if best.0.is_none() || s.value > best.1.value {
            best = (Some(c), s);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DeltaKind {
    Added,
    Removed,
    Edited,
}

impl DeltaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeltaKind::Added => "ADDED",
            DeltaKind::Removed => "REMOVED",
            DeltaKind::Edited => "EDITED",
        }
    }

    pub fn swapped(self) -> DeltaKind {
        match self {
            DeltaKind::Added => DeltaKind::Removed,
            DeltaKind::Removed => DeltaKind::Added,
            DeltaKind::Edited => DeltaKind::Edited,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialSubtree {
    pub kind: DeltaKind,
    /// In A for REMOVED/EDITED, in B for ADDED.
    pub root: NodeId,
    /// Pre-order members in the root's tree.
    pub members: Vec<NodeId>,
    /// B-side root of an EDITED delta.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_root: Option<NodeId>,
    /// B-side members of an EDITED delta.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matched_members: Vec<NodeId>,
    /// Copy of the root node, so deltas can be compared across diffs.
    pub root_node: DomNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffConfig {
    pub edit_threshold: f64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig { edit_threshold: EDIT_THRESHOLD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffResult {
    pub page_url: String,
    pub from: Condition,
    pub to: Condition,
    pub page_diag: f64,
    /// `(node in A, node in B)` pairs of the common tree.
    pub common: Vec<(NodeId, NodeId)>,
    pub deltas: Vec<DifferentialSubtree>,
}

impl DiffResult {
    pub fn count(&self, kind: DeltaKind) -> usize {
        self.deltas.iter().filter(|d| d.kind == kind).count()
    }
}

/// Diagonal of the larger of the two page extents.
pub fn page_diagonal(a: &Snapshot, b: &Snapshot) -> f64 {
    let (wa, ha) = a.page_size();
    let (wb, hb) = b.page_size();
    let d = wa.max(wb).hypot(ha.max(hb));
    if d > 0.0 {
        d
    } else {
        1.0
    }
}

pub fn diff_trees(a: &Snapshot, b: &Snapshot) -> DiffResult {
    diff_with(a, b, &DiffConfig::default())
}

pub fn diff_with(a: &Snapshot, b: &Snapshot, cfg: &DiffConfig) -> DiffResult {
    let ta = a.tree();
    let tb = b.tree();
    let diag = page_diagonal(a, b);
    let mut out = DiffResult {
        page_url: a.page_url.clone(),
        from: a.condition,
        to: b.condition,
        page_diag: diag,
        common: Vec::new(),
        deltas: Vec::new(),
    };
    let (ra, rb) = match (ta.root_node(), tb.root_node()) {
        (Some(ra), Some(rb)) => (ra, rb),
        (Some(ra), None) => {
            out.deltas.push(whole(&ta, ra, DeltaKind::Removed));
            return out;
        }
        (None, Some(rb)) => {
            out.deltas.push(whole(&tb, rb, DeltaKind::Added));
            return out;
        }
        (None, None) => return out,
    };

    let mut walker = Walker { ta: &ta, tb: &tb, diag, cfg, out: &mut out };
    let s = node_similarity(ra, rb, diag);
    if s.exact {
        walker.out.common.push((ra.id, rb.id));
        walker.walk(ra, rb, None);
    } else if s.value >= cfg.edit_threshold {
        let d = walker.open_edit(ra, rb);
        walker.walk(ra, rb, Some(d));
    } else {
        walker.out.deltas.push(whole(&ta, ra, DeltaKind::Removed));
        walker.out.deltas.push(whole(&tb, rb, DeltaKind::Added));
    }
    out
}

fn whole(tree: &DomTree<'_>, root: &DomNode, kind: DeltaKind) -> DifferentialSubtree {
    DifferentialSubtree {
        kind,
        root: root.id,
        members: tree.subtree(root.id),
        matched_root: None,
        matched_members: Vec::new(),
        root_node: root.clone(),
    }
}

/// Greedy sibling matching: pairs at or above the edit threshold are
/// claimed by descending score. Ties break on `i + j`, then `i`; pairs that
/// tie on both keys share no node, so the result does not depend on which
/// tree is passed first.
pub fn match_siblings(
    a: &[&DomNode],
    b: &[&DomNode],
    page_diag: f64,
    edit_threshold: f64,
) -> Vec<(usize, usize, MatchScore)> {
    let mut pairs = Vec::new();
    for (i, na) in a.iter().enumerate() {
        for (j, nb) in b.iter().enumerate() {
            let s = node_similarity(na, nb, page_diag);
            if s.exact || s.value >= edit_threshold {
                pairs.push((i, j, s));
            }
        }
    }
    pairs.sort_by(|x, y| {
        y.2.value
            .total_cmp(&x.2.value)
            .then((x.0 + x.1).cmp(&(y.0 + y.1)))
            .then(x.0.cmp(&y.0))
    });
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut picked = Vec::new();
    for (i, j, s) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            picked.push((i, j, s));
        }
    }
    picked.sort_by(|x, y| x.0.cmp(&y.0).then(Ordering::Equal));
    picked
}

struct Walker<'w, 'a> {
    ta: &'w DomTree<'a>,
    tb: &'w DomTree<'a>,
    diag: f64,
    cfg: &'w DiffConfig,
    out: &'w mut DiffResult,
}

impl<'w, 'a> Walker<'w, 'a> {
    fn open_edit(&mut self, a: &DomNode, b: &DomNode) -> usize {
        self.out.deltas.push(DifferentialSubtree {
            kind: DeltaKind::Edited,
            root: a.id,
            members: vec![a.id],
            matched_root: Some(b.id),
            matched_members: vec![b.id],
            root_node: a.clone(),
        });
        self.out.deltas.len() - 1
    }

    /// Matches the children of a matched pair. `edit` is the open EDITED
    /// delta when the pair itself is an edit.
    fn walk(&mut self, a: &'a DomNode, b: &'a DomNode, edit: Option<usize>) {
        let mut stack = vec![(a, b, edit)];
        while let Some((a, b, edit)) = stack.pop() {
            let ca: Vec<&'a DomNode> = self.ta.children(a.id).collect();
            let cb: Vec<&'a DomNode> = self.tb.children(b.id).collect();
            let picked = match_siblings(&ca, &cb, self.diag, self.cfg.edit_threshold);
            let mut matched_a = vec![None; ca.len()];
            let mut claimed_b = vec![false; cb.len()];
            for &(i, j, s) in &picked {
                matched_a[i] = Some((j, s));
                claimed_b[j] = true;
            }
            let mut next = Vec::new();
            for (i, na) in ca.iter().enumerate() {
                match matched_a[i] {
                    Some((j, s)) if s.exact => {
                        self.out.common.push((na.id, cb[j].id));
                        next.push((*na, cb[j], None));
                    }
                    Some((j, _)) => {
                        let d = match edit {
                            Some(d) => {
                                let delta = &mut self.out.deltas[d];
                                delta.members.push(na.id);
                                delta.matched_members.push(cb[j].id);
                                d
                            }
                            None => self.open_edit(na, cb[j]),
                        };
                        next.push((*na, cb[j], Some(d)));
                    }
                    None => self.out.deltas.push(whole(self.ta, na, DeltaKind::Removed)),
                }
            }
            for (j, nb) in cb.iter().enumerate() {
                if !claimed_b[j] {
                    self.out.deltas.push(whole(self.tb, nb, DeltaKind::Added));
                }
            }
            // keep document order when popping
            stack.extend(next.into_iter().rev());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::Attrs;
    use crate::synth::{NodeSpec, PageBuilder};

    fn node(tag: &str, text: &str, classes: &[&str], x: f64, y: f64) -> DomNode {
        DomNode {
            id: NodeId(0),
            tag: tag.into(),
            parent: None,
            children: vec![],
            attrs: Attrs {
                class_list: classes.iter().map(|c| c.to_string()).collect(),
                ..Attrs::default()
            },
            cues: crate::snapshot::VisualCues {
                x,
                y,
                width: 10.0,
                height: 10.0,
                text: text.into(),
                ..Default::default()
            },
        }
    }

    #[test]
    fn different_html_ids_disqualify() {
        let mut a = node("div", "t", &[], 0.0, 0.0);
        let mut b = a.clone();
        a.attrs.html_id = Some("a".into());
        b.attrs.html_id = Some("b".into());
        let s = node_similarity(&a, &b, 100.0);
        assert_eq!(s, MatchScore { value: 0.0, disqualified: true, exact: false });
        let mut c = a.clone();
        c.attrs.src = Some("x.png".into());
        assert!(node_similarity(&a, &c, 100.0).disqualified);
        let mut d = a.clone();
        d.tag = "span".into();
        assert!(node_similarity(&a, &d, 100.0).disqualified);
    }

    #[test]
    fn identical_nodes_score_one() {
        let a = node("div", "hello", &["x"], 3.0, 4.0);
        let s = node_similarity(&a, &a.clone(), 100.0);
        assert_eq!(s.value, 1.0);
        assert!(s.exact);
    }

    #[test]
    fn class_subset_scores_five_sixths() {
        let a = node("div", "same", &["x", "y"], 0.0, 0.0);
        let b = node("div", "same", &["x"], 0.0, 0.0);
        let s = node_similarity(&a, &b, 100.0);
        assert!((s.value - (1.0 + 0.5 + 1.0) / 3.0).abs() < 1e-12);
        assert!(!s.exact);
    }

    #[test]
    fn tiny_moves_are_not_exact() {
        let a = node("div", "same", &[], 0.0, 0.0);
        let b = node("div", "same", &[], 1e-9, 0.0);
        let s = node_similarity(&a, &b, 1e12);
        assert!(s.value < 1.0);
        assert!(!s.exact);
    }

    #[test]
    fn lcs_ratio() {
        assert_eq!(text_similarity("", ""), 1.0);
        assert_eq!(text_similarity("abc", ""), 0.0);
        assert!((text_similarity("abcd", "abed") - 0.75).abs() < 1e-12);
    }

    #[test]
    fn best_match_rules() {
        let a = node("div", "x", &[], 0.0, 0.0);
        assert_eq!(best_match(&a, std::iter::empty(), 10.0), (None, MatchScore::ZERO));
        let same = a.clone();
        let (m, s) = best_match(&a, [&same], 10.0);
        assert!(m.is_some() && s.value == 1.0);
    }

    #[test]
    fn self_diff_is_all_common() {
        let mut b = PageBuilder::new("https://a.test/");
        b.add_paragraph("one");
        b.add_paragraph("two");
        let s = b.build();
        let d = diff_trees(&s, &s);
        assert!(d.deltas.is_empty());
        assert_eq!(d.common.len(), s.nodes.len());
    }

    #[test]
    fn dropped_leaf_is_one_removed_delta() {
        let mut b = PageBuilder::new("https://a.test/");
        b.add_paragraph("one");
        let body = b.body();
        let leaf = b.add(body, NodeSpec::new("img", 0.0, 50.0, 30.0, 30.0).src("ad.png"));
        let a = b.build();
        let mut bs = a.clone();
        bs.nodes.retain(|n| n.id != leaf);
        bs.nodes[1].children.retain(|c| *c != leaf);
        let d = diff_trees(&a, &bs);
        assert_eq!(d.deltas.len(), 1);
        assert_eq!(d.deltas[0].kind, DeltaKind::Removed);
        assert_eq!(d.deltas[0].root, leaf);
        assert_eq!(d.deltas[0].members, vec![leaf]);
    }

    #[test]
    fn edited_chain_joins_one_delta() {
        let mut b = PageBuilder::new("https://a.test/");
        let body = b.body();
        let outer = b.add(body, NodeSpec::new("div", 0.0, 0.0, 500.0, 100.0).text("outer text"));
        let inner = b.add(outer, NodeSpec::new("p", 0.0, 0.0, 500.0, 50.0).text("inner text"));
        let a = b.build();
        let mut bs = a.clone();
        bs.nodes[outer.0 as usize].cues.text = "outer texT".into();
        bs.nodes[inner.0 as usize].cues.text = "inner texT".into();
        let d = diff_trees(&a, &bs);
        assert_eq!(d.deltas.len(), 1);
        let e = &d.deltas[0];
        assert_eq!(e.kind, DeltaKind::Edited);
        assert_eq!(e.root, outer);
        assert_eq!(e.members, vec![outer, inner]);
        assert_eq!(e.matched_members, vec![outer, inner]);
    }
}
