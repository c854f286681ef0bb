//! Checks shared by the focused integration tests and the acceptance
//! target. Each returns measurements; callers decide the tolerance.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use breakwatch::learn::{Dataset, ResampleStrategy};
use breakwatch::snapshot::{DomNode, NodeId, Snapshot};
use breakwatch::treediff::{node_similarity, DeltaKind, DiffResult, EDIT_THRESHOLD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

// ---------------------------------------------------------------- treediff

/// Role of a node in a diff, with its partner for common and edited nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Common(NodeId),
    Edited(NodeId),
    Removed,
    Added,
}

pub type Partition = (BTreeMap<NodeId, Role>, BTreeMap<NodeId, Role>);

/// Reads the A-side and B-side partition out of a diff. Panics when a
/// node is assigned twice.
pub fn partition_of(d: &DiffResult) -> Partition {
    let mut a = BTreeMap::new();
    let mut b = BTreeMap::new();
    let put = |m: &mut BTreeMap<NodeId, Role>, k: NodeId, v: Role| {
        assert!(m.insert(k, v).is_none(), "node {k:?} assigned twice");
    };
    for &(x, y) in &d.common {
        put(&mut a, x, Role::Common(y));
        put(&mut b, y, Role::Common(x));
    }
    for delta in &d.deltas {
        match delta.kind {
            DeltaKind::Edited => {
                assert_eq!(delta.members.len(), delta.matched_members.len());
                for (&x, &y) in delta.members.iter().zip(&delta.matched_members) {
                    put(&mut a, x, Role::Edited(y));
                    put(&mut b, y, Role::Edited(x));
                }
            }
            DeltaKind::Removed => delta.members.iter().for_each(|&x| put(&mut a, x, Role::Removed)),
            DeltaKind::Added => delta.members.iter().for_each(|&y| put(&mut b, y, Role::Added)),
        }
    }
    (a, b)
}

fn children<'s>(s: &'s Snapshot, id: NodeId) -> Vec<&'s DomNode> {
    let by_id: BTreeMap<NodeId, &DomNode> = s.nodes.iter().map(|n| (n.id, n)).collect();
    by_id[&id].children.iter().map(|c| by_id[c]).collect()
}

fn root(s: &Snapshot) -> Option<&DomNode> {
    s.nodes.iter().find(|n| n.parent.is_none())
}

fn mark_subtree(s: &Snapshot, id: NodeId, role: Role, out: &mut BTreeMap<NodeId, Role>) {
    out.insert(id, role);
    for c in children(s, id) {
        mark_subtree(s, c.id, role, out);
    }
}

/// Key of a candidate pair: larger is preferred. Score first, then the
/// earlier pair (smaller `i + j`, then smaller `i`).
type PairKey = (f64, i64, i64);

fn better(x: &[PairKey], y: &[PairKey]) -> bool {
    for (a, b) in x.iter().zip(y) {
        match a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)) {
            std::cmp::Ordering::Greater => return true,
            std::cmp::Ordering::Less => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    x.len() > y.len()
}

/// Exhaustive sibling matching: enumerates every injective matching over
/// admissible pairs and keeps the one whose pair keys, sorted best first,
/// are lexicographically largest.
fn brute_force_siblings(ca: &[&DomNode], cb: &[&DomNode], diag: f64) -> Vec<(usize, usize, bool)> {
    let score = |i: usize, j: usize| node_similarity(ca[i], cb[j], diag);
    let admissible: Vec<Vec<Option<(f64, bool)>>> = (0..ca.len())
        .map(|i| {
            (0..cb.len())
                .map(|j| {
                    let s = score(i, j);
                    (s.exact || s.value >= EDIT_THRESHOLD).then_some((s.value, s.exact))
                })
                .collect()
        })
        .collect();
    let mut best: (Vec<PairKey>, Vec<(usize, usize, bool)>) = (Vec::new(), Vec::new());
    let mut used = vec![false; cb.len()];
    let mut cur = Vec::new();
    fn rec(
        i: usize,
        adm: &[Vec<Option<(f64, bool)>>],
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize, f64, bool)>,
        best: &mut (Vec<PairKey>, Vec<(usize, usize, bool)>),
    ) {
        if i == adm.len() {
            let mut keys: Vec<PairKey> = cur.iter().map(|&(a, b, s, _)| (s, -((a + b) as i64), -(a as i64))).collect();
            keys.sort_by(|x, y| y.0.total_cmp(&x.0).then(y.1.cmp(&x.1)).then(y.2.cmp(&x.2)));
            if better(&keys, &best.0) {
                *best = (keys, cur.iter().map(|&(a, b, _, e)| (a, b, e)).collect());
            }
            return;
        }
        rec(i + 1, adm, used, cur, best);
        for j in 0..used.len() {
            if let (false, Some((s, e))) = (used[j], adm[i][j]) {
                used[j] = true;
                cur.push((i, j, s, e));
                rec(i + 1, adm, used, cur, best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    rec(0, &admissible, &mut used, &mut cur, &mut best);
    best.1
}

/// Independent reference diff: level-wise walk with exhaustive sibling
/// matching. Returns the same partition shape as [`partition_of`].
pub fn brute_force_partition(a: &Snapshot, b: &Snapshot, diag: f64) -> Partition {
    let mut pa = BTreeMap::new();
    let mut pb = BTreeMap::new();
    let (ra, rb) = match (root(a), root(b)) {
        (Some(x), Some(y)) => (x, y),
        (Some(x), None) => {
            mark_subtree(a, x.id, Role::Removed, &mut pa);
            return (pa, pb);
        }
        (None, Some(y)) => {
            mark_subtree(b, y.id, Role::Added, &mut pb);
            return (pa, pb);
        }
        (None, None) => return (pa, pb),
    };
    let s = node_similarity(ra, rb, diag);
    let mut queue = Vec::new();
    if s.exact {
        pa.insert(ra.id, Role::Common(rb.id));
        pb.insert(rb.id, Role::Common(ra.id));
        queue.push((ra.id, rb.id));
    } else if s.value >= EDIT_THRESHOLD {
        pa.insert(ra.id, Role::Edited(rb.id));
        pb.insert(rb.id, Role::Edited(ra.id));
        queue.push((ra.id, rb.id));
    } else {
        mark_subtree(a, ra.id, Role::Removed, &mut pa);
        mark_subtree(b, rb.id, Role::Added, &mut pb);
    }
    while let Some((x, y)) = queue.pop() {
        let ca = children(a, x);
        let cb = children(b, y);
        let m = brute_force_siblings(&ca, &cb, diag);
        let mut hit_a = vec![false; ca.len()];
        let mut hit_b = vec![false; cb.len()];
        for (i, j, exact) in m {
            hit_a[i] = true;
            hit_b[j] = true;
            let (ia, jb) = (ca[i].id, cb[j].id);
            if exact {
                pa.insert(ia, Role::Common(jb));
                pb.insert(jb, Role::Common(ia));
            } else {
                pa.insert(ia, Role::Edited(jb));
                pb.insert(jb, Role::Edited(ia));
            }
            queue.push((ia, jb));
        }
        for (n, _) in ca.iter().zip(&hit_a).filter(|(_, hit)| !**hit) {
            mark_subtree(a, n.id, Role::Removed, &mut pa);
        }
        for (n, _) in cb.iter().zip(&hit_b).filter(|(_, hit)| !**hit) {
            mark_subtree(b, n.id, Role::Added, &mut pb);
        }
    }
    (pa, pb)
}

pub struct OracleRun {
    pub pairs: usize,
    pub agree: usize,
    pub first_mismatch: Option<u64>,
    /// Pairs whose diff has at least one edited, removed and added node.
    pub with_edits: usize,
    pub with_removals: usize,
    pub with_additions: usize,
    pub elapsed: Duration,
}

/// Compares `diff_trees` with the brute-force matcher on random pairs.
pub fn treediff_oracle(pairs: usize, seed: u64) -> OracleRun {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agree = 0;
    let mut first_mismatch = None;
    let (mut with_edits, mut with_removals, mut with_additions) = (0, 0, 0);
    for k in 0..pairs {
        let (a, b) = breakwatch::synth::random_tree_pair(&mut rng, 30, 6);
        let d = breakwatch::treediff::diff_trees(&a, &b);
        with_edits += usize::from(d.count(DeltaKind::Edited) > 0);
        with_removals += usize::from(d.count(DeltaKind::Removed) > 0);
        with_additions += usize::from(d.count(DeltaKind::Added) > 0);
        if partition_of(&d) == brute_force_partition(&a, &b, d.page_diag) {
            agree += 1;
        } else if first_mismatch.is_none() {
            first_mismatch = Some(k as u64);
        }
    }
    OracleRun { pairs, agree, first_mismatch, with_edits, with_removals, with_additions, elapsed: t.elapsed() }
}

/// Number of conservation violations: every node of A (resp. B) must be
/// common, edited or removed (resp. added) exactly once.
pub fn conservation_violations(a: &Snapshot, b: &Snapshot, d: &DiffResult) -> usize {
    let count = |s: &Snapshot, side_of: &dyn Fn(&DiffResult) -> Vec<NodeId>| {
        let mut seen: BTreeMap<NodeId, usize> = BTreeMap::new();
        for id in side_of(d) {
            *seen.entry(id).or_default() += 1;
        }
        s.nodes.iter().filter(|n| seen.get(&n.id) != Some(&1)).count() + seen.keys().filter(|k| !s.nodes.iter().any(|n| n.id == **k)).count()
    };
    let a_side = |d: &DiffResult| {
        let mut v: Vec<NodeId> = d.common.iter().map(|p| p.0).collect();
        for x in &d.deltas {
            if x.kind != DeltaKind::Added {
                v.extend(&x.members);
            }
        }
        v
    };
    let b_side = |d: &DiffResult| {
        let mut v: Vec<NodeId> = d.common.iter().map(|p| p.1).collect();
        for x in &d.deltas {
            match x.kind {
                DeltaKind::Added => v.extend(&x.members),
                DeltaKind::Edited => v.extend(&x.matched_members),
                DeltaKind::Removed => {}
            }
        }
        v
    };
    count(a, &a_side) + count(b, &b_side)
}

pub fn conservation_sweep(pairs: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pairs)
        .map(|_| {
            let (a, b) = breakwatch::synth::random_tree_pair(&mut rng, 30, 6);
            conservation_violations(&a, &b, &breakwatch::treediff::diff_trees(&a, &b))
        })
        .sum()
}

// ------------------------------------------------------------------ learn

/// O(n^2) pairwise AUC: the share of (positive, negative) pairs ranked
/// correctly, ties counting one half.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            den += 1.0;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / den
}

/// Largest |roc_auc - pairwise| over random instances; every third one
/// draws scores from five values to force ties.
pub fn auc_oracle_max_error(instances: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let n = rng.gen_range(2..300);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        labels[0] = true;
        labels[1] = false;
        let scores: Vec<f64> = (0..n)
            .map(|_| if k % 3 == 0 { rng.gen_range(0..5) as f64 * 0.25 } else { rng.gen::<f64>() })
            .collect();
        let got = breakwatch::learn::roc_auc(&scores, &labels).expect("two classes");
        worst = worst.max((got - pairwise_auc(&scores, &labels)).abs());
    }
    worst
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Whether `p` lies on the segment from `a` to `b`.
fn on_segment(p: &[f64], a: &[f64], b: &[f64]) -> bool {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    if len2 == 0.0 {
        return sq(p, a) < 1e-18;
    }
    let t: f64 = p.iter().zip(a).zip(&ab).map(|((pi, ai), d)| (pi - ai) * d).sum::<f64>() / len2;
    if !(-1e-12..=1.0 + 1e-12).contains(&t) {
        return false;
    }
    p.iter().zip(a).zip(&ab).all(|((pi, ai), d)| (pi - (ai + t * d)).abs() <= 1e-9 * (1.0 + ai.abs() + d.abs()))
}

/// SMOTE rows that are not on a segment between a minority row and one of
/// its k nearest minority neighbours, over random datasets.
pub fn smote_violations(datasets: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    let mut synthetic = 0;
    for s in 0..datasets {
        let dims = rng.gen_range(1..6);
        let minority = rng.gen_range(4..20);
        let majority = minority + rng.gen_range(1..40);
        let k = rng.gen_range(1..minority);
        let mut d = Dataset::new((0..dims).map(|i| format!("f{i}")).collect(), vec!["min".into(), "maj".into()]);
        for i in 0..minority + majority {
            let c = usize::from(i >= minority);
            d.push((0..dims).map(|_| rng.gen_range(-5.0..5.0) + 3.0 * c as f64).collect(), c);
        }
        let out = breakwatch::learn::resample(&d, ResampleStrategy::Smote, k, s as u64).expect("enough rows");
        let mins: Vec<&Vec<f64>> = (0..d.len()).filter(|&i| d.y[i] == 0).map(|i| &d.x[i]).collect();
        for (row, &c) in out.x.iter().zip(&out.y).skip(d.len()) {
            assert_eq!(c, 0, "only the minority grows");
            synthetic += 1;
            let ok = mins.iter().enumerate().any(|(ia, a)| {
                let mut dist: Vec<f64> =
                    mins.iter().enumerate().filter(|(ib, _)| *ib != ia).map(|(_, b)| sq(a, b)).collect();
                dist.sort_by(f64::total_cmp);
                let kth = dist[k - 1];
                mins.iter().enumerate().any(|(ib, b)| ib != ia && sq(a, b) <= kth && on_segment(row, a, b))
            });
            if !ok {
                bad += 1;
            }
        }
    }
    (bad, synthetic)
}

/// Three well-separated Gaussian classes plus two noise columns.
pub fn separable_three_class(rows: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [[0.0, 0.0, 0.0, 0.0], [6.0, 6.0, 0.0, 0.0], [0.0, 6.0, 6.0, 6.0]];
    let mut d = Dataset::new(
        ["a", "b", "c", "d", "noise1", "noise2"].iter().map(|s| s.to_string()).collect(),
        vec!["c0".into(), "c1".into(), "c2".into()],
    );
    for i in 0..rows {
        let c = i % 3;
        let mut row: Vec<f64> = centers[c].iter().map(|m| m + gauss(&mut rng)).collect();
        row.push(gauss(&mut rng));
        row.push(rng.gen::<f64>());
        d.push(row, c);
    }
    d
}

pub fn gauss(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn shuffled_labels(d: &Dataset, seed: u64) -> Dataset {
    use rand::seq::SliceRandom;
    let mut out = d.clone();
    out.y.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

/// Binary data with a label-copy column, two weak signals and two noise
/// columns.
pub fn loco_dataset(rows: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Dataset::new(
        ["label_copy", "weak1", "weak2", "noise1", "noise2"].iter().map(|s| s.to_string()).collect(),
        vec!["pos".into(), "neg".into()],
    );
    for i in 0..rows {
        let c = i % 2;
        let y = c as f64;
        d.push(
            vec![y, 0.5 * y + 2.0 * gauss(&mut rng), 0.5 * y + 2.0 * gauss(&mut rng), gauss(&mut rng), rng.gen()],
            c,
        );
    }
    d
}

pub fn small_trainer(kind: breakwatch::learn::EnsembleKind, trees: usize, seed: u64) -> breakwatch::learn::Trainer {
    let t = breakwatch::learn::Trainer::new(kind).with_seed(seed);
    let mut h = t.hyperparams;
    h.n_trees = trees;
    t.with_hyperparams(h)
}

// -------------------------------------------------------------- labeling

/// The labeling table as stated in prose, written out cell by cell:
/// (kind, transition, also_in_nf) -> label.
pub fn prose_label_table() -> Vec<((DeltaKind, breakwatch::labeling::TransitionKind, bool), breakwatch::labeling::SubtreeLabel)> {
    use breakwatch::labeling::{SubtreeLabel::*, TransitionKind::*};
    use DeltaKind::*;
    vec![
        // removed or edited when introducing the fixed list: blocked ads
        ((Removed, NoneToFixed, false), Legitimate),
        ((Removed, NoneToFixed, true), Legitimate),
        ((Edited, NoneToFixed, false), Legitimate),
        ((Edited, NoneToFixed, true), Legitimate),
        // blocked by both lists: legitimate; by the breaking list only: broken
        ((Removed, NoneToBreaking, false), Broken),
        ((Removed, NoneToBreaking, true), Legitimate),
        ((Edited, NoneToBreaking, false), Broken),
        ((Edited, NoneToBreaking, true), Legitimate),
        // rules only remove, so additions after a list change are page dynamics
        ((Added, NoneToFixed, false), Neutral),
        ((Added, NoneToFixed, true), Neutral),
        ((Added, NoneToBreaking, false), Neutral),
        ((Added, NoneToBreaking, true), Neutral),
        // restored by the fix: broken unless it also appears without lists
        ((Added, BreakingToFixed, false), Broken),
        ((Added, BreakingToFixed, true), Neutral),
        // the fixed list still removes it: legitimate
        ((Removed, BreakingToFixed, false), Legitimate),
        ((Removed, BreakingToFixed, true), Legitimate),
        ((Edited, BreakingToFixed, false), Legitimate),
        ((Edited, BreakingToFixed, true), Legitimate),
    ]
}

pub fn label_table_mismatches() -> (usize, usize) {
    let table = prose_label_table();
    let bad = table
        .iter()
        .filter(|((k, t, x), want)| breakwatch::labeling::label_subtree(*k, *t, *x) != *want)
        .count();
    (bad, table.len())
}

// ------------------------------------------------------------ segmentation

/// Pairs of consecutive rounds where some leaf of round `r + 1` is not
/// contained in a leaf of round `r`.
pub fn refinement_violations(s: &Snapshot, max_rounds: usize) -> usize {
    use breakwatch::segmentation::{leaf_blocks, segment_page};
    use std::collections::BTreeSet;
    let leaves = |r: usize| -> Vec<BTreeSet<NodeId>> {
        let h = segment_page(s, r).expect("segmentable");
        leaf_blocks(&h).iter().map(|b| b.members.iter().copied().collect()).collect()
    };
    let mut bad = 0;
    let mut prev = leaves(1);
    for r in 2..=max_rounds {
        let cur = leaves(r);
        bad += cur.iter().filter(|l| !prev.iter().any(|p| l.is_subset(p))).count();
        prev = cur;
    }
    bad
}

/// Every snapshot in the fixture bundle.
pub fn all_fixture_snapshots() -> Vec<(String, Snapshot)> {
    breakwatch::synth::snapshot_files()
        .into_iter()
        .filter(|(p, _)| !p.to_string_lossy().contains("manifest"))
        .map(|(p, bytes)| (p.display().to_string(), breakwatch::snapshot::parse_snapshot(&bytes).expect("valid")))
        .collect()
}

// ----------------------------------------------------------------- ingest

pub struct IngestAgreement {
    pub rules_ok: usize,
    pub rules_total: usize,
    pub urls_ok: usize,
    pub urls_total: usize,
    pub manual: usize,
    pub dropped: usize,
    pub mismatches: Vec<String>,
}

pub fn ingest_agreement() -> IngestAgreement {
    use breakwatch::ingest::{classify_filter_rule, ingest_record, read_export, RuleKind, UrlExtraction};
    let dir = fixtures();
    let mut r = IngestAgreement {
        rules_ok: 0,
        rules_total: 0,
        urls_ok: 0,
        urls_total: 0,
        manual: 0,
        dropped: 0,
        mismatches: Vec::new(),
    };
    let oracle = std::fs::read_to_string(dir.join("rules_oracle.tsv")).unwrap();
    for line in oracle.lines().filter(|l| !l.starts_with("# ") && !l.is_empty()) {
        let (rule, want) = line.rsplit_once('\t').unwrap();
        let got = match classify_filter_rule(rule) {
            Ok(RuleKind::Blocking) => "BLOCKING",
            Ok(RuleKind::Content) => "CONTENT",
            Err(_) => "UNPARSABLE",
        };
        r.rules_total += 1;
        if got == want {
            r.rules_ok += 1;
        } else {
            r.mismatches.push(format!("rule `{rule}`: {got} != {want}"));
        }
    }
    let recs = read_export(dir.join("forum/issues.json"), None).unwrap();
    let expected = std::fs::read_to_string(dir.join("forum/expected.tsv")).unwrap();
    let want: BTreeMap<String, Vec<String>> = expected
        .lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<String> = l.split('\t').map(str::to_string).collect();
            (cols[0].clone(), cols[1..].to_vec())
        })
        .collect();
    for rec in &recs {
        let got = ingest_record(rec);
        let (status, url) = match &got.url {
            UrlExtraction::Url(u) => ("URL", u.clone()),
            UrlExtraction::Manual => ("MANUAL", String::new()),
            UrlExtraction::Drop => ("DROP", String::new()),
        };
        match status {
            "MANUAL" => r.manual += 1,
            "DROP" => r.dropped += 1,
            _ => {}
        }
        let (b, f) = got
            .lists
            .as_ref()
            .map(|l| (l.breaking_ref.to_string(), l.fixing_ref.to_string()))
            .unwrap_or_default();
        let row = vec![status.to_string(), url, b, f];
        r.urls_total += 1;
        if want.get(&rec.id) == Some(&row) {
            r.urls_ok += 1;
        } else {
            r.mismatches.push(format!("{}: {row:?} != {:?}", rec.id, want.get(&rec.id)));
        }
    }
    r
}
