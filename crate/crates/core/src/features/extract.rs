use std::collections::{BTreeSet, HashSet};

use crate::labeling::{label_visit_triple, TransitionKind};
use crate::snapshot::{EnvironmentGraph, NodeId, Rect, Snapshot};
use crate::treediff::{diff_trees, DeltaKind, DiffResult, DifferentialSubtree};

use super::dataset::RowMeta;
use super::{assemble_row, tag_group, FeatureRow, FeatureVector, Scope, TagGroup};

/// Salient node sets of the two snapshots of a diff.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SalientSets {
    pub before: Vec<Vec<NodeId>>,
    pub after: Vec<Vec<NodeId>>,
}

impl SalientSets {
    /// Uses the `salient_blocks` recorded in the snapshots, if any.
    pub fn from_snapshots(a: &Snapshot, b: &Snapshot) -> Self {
        SalientSets {
            before: a.salient_blocks.clone().unwrap_or_default(),
            after: b.salient_blocks.clone().unwrap_or_default(),
        }
    }
}

struct Side<'s> {
    snap: &'s Snapshot,
    env: &'s EnvironmentGraph,
    members: &'s [NodeId],
    salient: &'s [Vec<NodeId>],
}

impl Side<'_> {
    fn rects(&self, ids: &[NodeId]) -> Vec<Rect> {
        let tree = self.snap.tree();
        ids.iter()
            .filter_map(|id| tree.node(*id))
            .filter(|n| n.cues.is_rendered())
            .map(|n| n.cues.rect())
            .collect()
    }

    fn bbox(&self) -> Option<Rect> {
        Rect::bounding(&self.rects(self.members))
    }

    fn visible(&self) -> usize {
        let tree = self.snap.tree();
        self.members
            .iter()
            .filter_map(|id| tree.node(*id))
            .filter(|n| n.cues.visible)
            .count()
    }

    fn salient_in(&self) -> usize {
        let m: HashSet<NodeId> = self.members.iter().copied().collect();
        self.salient.iter().filter(|set| set.iter().any(|n| m.contains(n))).count()
    }

    fn salient_covered(&self) -> usize {
        let Some(bbox) = self.bbox() else { return 0 };
        self.salient
            .iter()
            .filter_map(|set| Rect::bounding(&self.rects(set)))
            .filter(|r| r.intersection_area(&bbox) > 0.0)
            .count()
    }

    fn salient_members(&self) -> usize {
        let all: HashSet<NodeId> = self.salient.iter().flatten().copied().collect();
        self.members.iter().filter(|m| all.contains(m)).count()
    }

    fn requests_by_elements(&self) -> usize {
        self.members.iter().map(|m| self.env.requests_of(*m).len()).sum()
    }

    fn scripts(&self) -> BTreeSet<String> {
        self.members
            .iter()
            .flat_map(|m| self.env.scripts_touching(*m).map(str::to_string))
            .collect()
    }

    fn interactions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .members
            .iter()
            .flat_map(|m| self.env.interactions_on(*m).iter().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn touched_after_interaction(&self) -> usize {
        let first = self
            .interactions()
            .iter()
            .map(|i| self.snap.interactions[*i].timestamp)
            .fold(f64::INFINITY, f64::min);
        self.env.all_touches().filter(|(_, _, t)| *t > first).count()
    }

    fn errors_after_interaction(&self) -> usize {
        self.interactions().iter().map(|i| self.env.errors_caused_by(*i).len()).sum()
    }

    fn text_length(&self) -> usize {
        let tree = self.snap.tree();
        self.members
            .iter()
            .filter_map(|id| tree.node(*id))
            .map(|n| n.cues.text.chars().count())
            .sum()
    }

    fn group_counts(&self) -> [usize; 4] {
        let tree = self.snap.tree();
        let mut c = [0; 4];
        for n in self.members.iter().filter_map(|id| tree.node(*id)) {
            let g = TagGroup::ALL.iter().position(|g| *g == tag_group(&n.tag)).unwrap();
            c[g] += 1;
        }
        c
    }

    fn iframes(&self) -> usize {
        let tree = self.snap.tree();
        self.members
            .iter()
            .filter_map(|id| tree.node(*id))
            .filter(|n| n.tag == "iframe")
            .count()
    }
}

fn related_requests(s: &Snapshot, scripts: &BTreeSet<String>) -> usize {
    s.requests
        .iter()
        .filter(|r| r.script_url.as_ref().is_some_and(|u| scripts.contains(u)))
        .count()
}

/// Features of one delta of `diff`, where `diff` compares `a` to `b`.
/// Delta features are `after - before` with an absent side counting 0.
pub fn extract_subtree_features(
    delta: &DifferentialSubtree,
    _diff: &DiffResult,
    a: &Snapshot,
    b: &Snapshot,
    env_a: &EnvironmentGraph,
    env_b: &EnvironmentGraph,
    salient: &SalientSets,
) -> FeatureVector {
    let empty: &[NodeId] = &[];
    let (a_members, b_members) = match delta.kind {
        DeltaKind::Removed => (delta.members.as_slice(), empty),
        DeltaKind::Added => (empty, delta.members.as_slice()),
        DeltaKind::Edited => (delta.members.as_slice(), delta.matched_members.as_slice()),
    };
    let before = Side { snap: a, env: env_a, members: a_members, salient: &salient.before };
    let after = Side { snap: b, env: env_b, members: b_members, salient: &salient.after };
    let source = if delta.kind == DeltaKind::Added { &after } else { &before };

    let mut v = FeatureVector::zeros(Scope::Subtree);
    let size_before = before.bbox().map_or(0.0, |r| r.area());
    let size_after = after.bbox().map_or(0.0, |r| r.area());
    v.set("size_before", size_before);
    v.set("size_after", size_after);
    v.set("size_delta", size_after - size_before);
    if let (DeltaKind::Edited, Some(mb)) = (delta.kind, delta.matched_root) {
        let ra = a.tree().node(delta.root).map(|n| (n.cues.x, n.cues.y));
        let rb = b.tree().node(mb).map(|n| (n.cues.x, n.cues.y));
        if let (Some(pa), Some(pb)) = (ra, rb) {
            v.set("position_shift", (pa.0 - pb.0).hypot(pa.1 - pb.1));
        }
    }
    v.set("visible_before", before.visible() as f64);
    v.set("visible_after", after.visible() as f64);
    v.set("salient_in_before", before.salient_in() as f64);
    v.set("salient_in_after", after.salient_in() as f64);
    v.set("salient_covered_before", before.salient_covered() as f64);
    v.set("salient_covered_after", after.salient_covered() as f64);
    let salient_name = match delta.kind {
        DeltaKind::Removed => "salient_removed",
        DeltaKind::Added => "salient_added",
        DeltaKind::Edited => "salient_edited",
    };
    v.set(salient_name, source.salient_members() as f64);

    let tree = source.snap.tree();
    let root_depth = tree.depth(delta.root);
    let depth = source
        .members
        .iter()
        .map(|m| tree.depth(*m).saturating_sub(root_depth))
        .max()
        .unwrap_or(0);
    let degrees: Vec<f64> = source
        .members
        .iter()
        .filter_map(|m| tree.node(*m))
        .map(|n| n.children.len() as f64)
        .collect();
    let n = degrees.len().max(1) as f64;
    let mean = degrees.iter().sum::<f64>() / n;
    let var = degrees.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    v.set("depth", depth as f64);
    v.set("node_count", source.members.len() as f64);
    v.set("avg_degree", mean);
    v.set("children_variance", var);
    v.set("root_depth", root_depth as f64);

    let kind_name = match delta.kind {
        DeltaKind::Added => "added",
        DeltaKind::Removed => "removed",
        DeltaKind::Edited => "edited",
    };
    for (g, count) in TagGroup::ALL.iter().zip(source.group_counts()) {
        v.set(&format!("{}_{kind_name}", g.as_str()), count as f64);
    }
    match delta.kind {
        DeltaKind::Added => v.set("iframe_added", after.iframes() as f64),
        DeltaKind::Removed => v.set("iframe_removed", before.iframes() as f64),
        DeltaKind::Edited => {}
    }
    v.set("iframe_total", source.iframes() as f64);
    v.set("text_length_delta", after.text_length() as f64 - before.text_length() as f64);

    v.set("requests_by_elements_before", before.requests_by_elements() as f64);
    v.set("requests_by_elements_after", after.requests_by_elements() as f64);
    let mut related = before.scripts();
    related.extend(after.scripts());
    v.set(
        "requests_by_related_scripts_delta",
        related_requests(b, &related) as f64 - related_requests(a, &related) as f64,
    );
    let touched: f64 = related
        .iter()
        .map(|s| env_b.touched_by(s).len() as f64 - env_a.touched_by(s).len() as f64)
        .sum();
    v.set("related_scripts_touched_delta", touched);
    v.set(
        "touched_after_interaction_delta",
        after.touched_after_interaction() as f64 - before.touched_after_interaction() as f64,
    );
    v.set("interaction_count", (before.interactions().len() + after.interactions().len()) as f64);
    v.set(
        "errors_after_interaction_delta",
        after.errors_after_interaction() as f64 - before.errors_after_interaction() as f64,
    );
    v.set("was_added", (delta.kind == DeltaKind::Added) as u8 as f64);
    v.set("was_removed", (delta.kind == DeltaKind::Removed) as u8 as f64);
    v.set("was_edited", (delta.kind == DeltaKind::Edited) as u8 as f64);
    v
}

/// Page-level features of a transition from `a` to `b`.
pub fn extract_global_features(
    diff: &DiffResult,
    a: &Snapshot,
    b: &Snapshot,
    _env_a: &EnvironmentGraph,
    _env_b: &EnvironmentGraph,
) -> FeatureVector {
    let urls = |s: &Snapshot| s.requests.iter().map(|r| r.url.clone()).collect::<BTreeSet<_>>();
    let (ua, ub) = (urls(a), urls(b));
    let (sa, sb) = (a.scripts(), b.scripts());
    let removed_scripts: BTreeSet<&str> = sa.difference(&sb).copied().collect();
    let errors_by_removed = a
        .errors
        .iter()
        .filter(|e| e.script_url.as_deref().is_some_and(|u| removed_scripts.contains(u)))
        .count();

    let mut v = FeatureVector::zeros(Scope::Global);
    v.set("requests_added", ub.difference(&ua).count() as f64);
    v.set("requests_removed", ua.difference(&ub).count() as f64);
    v.set("total_requests_before", a.requests.len() as f64);
    v.set("total_requests_after", b.requests.len() as f64);
    v.set("total_scripts_before", sa.len() as f64);
    v.set("total_scripts_after", sb.len() as f64);
    v.set("total_errors_before", a.errors.len() as f64);
    v.set("total_errors_after", b.errors.len() as f64);
    v.set("errors_by_removed_scripts", errors_by_removed as f64);
    v.set("subtrees_added", diff.count(DeltaKind::Added) as f64);
    v.set("subtrees_removed", diff.count(DeltaKind::Removed) as f64);
    v.set("subtrees_edited", diff.count(DeltaKind::Edited) as f64);
    v
}

/// Diffs a visit triple, labels every delta and extracts one labeled row
/// per delta, in N→F, N→B, B→F order.
pub fn extract_triple_rows(none: &Snapshot, breaking: &Snapshot, fixed: &Snapshot) -> Vec<(RowMeta, FeatureRow)> {
    let envs = [
        EnvironmentGraph::build(none),
        EnvironmentGraph::build(breaking),
        EnvironmentGraph::build(fixed),
    ];
    let snaps = [none, breaking, fixed];
    let pairs = [(0usize, 2usize), (0, 1), (1, 2)];
    let diffs: Vec<DiffResult> = pairs.iter().map(|&(i, j)| diff_trees(snaps[i], snaps[j])).collect();
    let globals: Vec<FeatureVector> = pairs
        .iter()
        .zip(&diffs)
        .map(|(&(i, j), d)| extract_global_features(d, snaps[i], snaps[j], &envs[i], &envs[j]))
        .collect();
    let labeled = label_visit_triple(&diffs[0], &diffs[1], &diffs[2]);
    labeled
        .into_iter()
        .map(|ld| {
            let t = TransitionKind::ALL.iter().position(|t| *t == ld.transition).unwrap();
            let (i, j) = pairs[t];
            let salient = SalientSets::from_snapshots(snaps[i], snaps[j]);
            let sub = extract_subtree_features(&ld.delta, &diffs[t], snaps[i], snaps[j], &envs[i], &envs[j], &salient);
            let row = assemble_row(&sub, &globals[t], Some(ld.label)).expect("extractors emit the universe");
            let meta = RowMeta {
                page_url: none.page_url.clone(),
                transition: ld.transition,
                kind: ld.delta.kind,
                root: ld.delta.root,
            };
            (meta, row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{NodeSpec, PageBuilder};

    #[test]
    fn removed_text_tags_count_as_text_removed() {
        let mut b = PageBuilder::new("https://a.test/");
        let body = b.body();
        let div = b.add(body, NodeSpec::new("section", 0.0, 0.0, 300.0, 120.0));
        for i in 0..3 {
            b.add(div, NodeSpec::new("p", 0.0, 40.0 * i as f64, 300.0, 40.0).text("x"));
        }
        let a = b.build();
        let mut after = a.clone();
        let ps: Vec<NodeId> = a.nodes[div.0 as usize].children.clone();
        after.nodes.retain(|n| !ps.contains(&n.id));
        after.nodes[div.0 as usize].children.clear();
        let d = diff_trees(&a, &after);
        assert_eq!(d.deltas.len(), 3);
        let (ea, eb) = (EnvironmentGraph::build(&a), EnvironmentGraph::build(&after));
        let mut text_removed = 0.0;
        for delta in &d.deltas {
            let v = extract_subtree_features(delta, &d, &a, &after, &ea, &eb, &SalientSets::default());
            text_removed += v.get("text_removed").unwrap();
            assert_eq!(v.get("text_added"), Some(0.0));
            assert_eq!(v.get("requests_by_elements_before"), Some(0.0));
            assert_eq!(v.get("interaction_count"), Some(0.0));
        }
        assert_eq!(text_removed, 3.0);
    }

    #[test]
    fn request_set_differences() {
        let mut pa = PageBuilder::new("https://a.test/");
        pa.request("u1", None, None, 0.0);
        pa.request("u2", None, None, 0.0);
        let mut pb = PageBuilder::new("https://a.test/");
        for u in ["u2", "u3", "u4"] {
            pb.request(u, None, None, 0.0);
        }
        let (a, b) = (pa.build(), pb.build());
        let d = diff_trees(&a, &b);
        let (ea, eb) = (EnvironmentGraph::build(&a), EnvironmentGraph::build(&b));
        let g = extract_global_features(&d, &a, &b, &ea, &eb);
        assert_eq!(g.get("requests_added"), Some(2.0));
        assert_eq!(g.get("requests_removed"), Some(1.0));
        let d2 = diff_trees(&b, &a);
        let g2 = extract_global_features(&d2, &b, &a, &eb, &ea);
        assert_eq!(g2.get("requests_added"), Some(1.0));
        assert_eq!(g2.get("requests_removed"), Some(2.0));
    }
}
