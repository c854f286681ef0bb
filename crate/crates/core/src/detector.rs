//! Page-level verdicts, baseline heuristics and the end-to-end pipeline.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::{
    assemble_row, extract_global_features, extract_subtree_features, feature_names, tag_group, SalientSets, TagGroup,
};
use crate::labeling::{also_in_nf, SubtreeLabel, TransitionKind};
use crate::learn::{argmax, EnsembleKind, Hyperparams, LearnError, ResampleStrategy, Trainer, TreeEnsembleModel};
use crate::saliency::{salient_node_sets, score_page};
use crate::segmentation::SegmentConfig;
use crate::snapshot::{Condition, EnvironmentGraph, NodeId, Snapshot};
use crate::treediff::{diff_with, DeltaKind, DiffConfig, DiffResult};

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("snapshot conditions/pages do not form a visit triple: {0}")]
    ConditionMismatch(String),
    #[error("breakage model: {0}")]
    Model(#[from] LearnError),
    #[error("model classes {0:?} lack BROKEN/LEGITIMATE/NEUTRAL")]
    ModelClasses(Vec<String>),
    #[error(transparent)]
    Other(#[from] crate::Error),
    #[error("unknown heuristic `{0}` (expected k<N> or r<PERCENT>)")]
    Heuristic(String),
}

/// Whether thresholds are met with `>=` or `>`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    #[default]
    AtLeast,
    MoreThan,
}

impl Comparison {
    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::AtLeast => value >= threshold,
            Comparison::MoreThan => value > threshold,
        }
    }
}

/// SINBAD-K (at least `k` broken subtrees) or SINBAD-R (broken ratio of at
/// least `r` percent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PageHeuristic {
    K(u32),
    R(f64),
}

impl Default for PageHeuristic {
    fn default() -> Self {
        PageHeuristic::K(1)
    }
}

impl fmt::Display for PageHeuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PageHeuristic::K(k) => write!(f, "k{k}"),
            PageHeuristic::R(r) => write!(f, "r{r}"),
        }
    }
}

impl FromStr for PageHeuristic {
    type Err = DetectError;

    fn from_str(s: &str) -> Result<Self, DetectError> {
        let bad = || DetectError::Heuristic(s.to_string());
        let lower = s.to_ascii_lowercase();
        let (head, rest) = lower.split_at(lower.len().min(1));
        match head {
            "k" => match rest.parse::<u32>() {
                Ok(k) if k >= 1 => Ok(PageHeuristic::K(k)),
                _ => Err(bad()),
            },
            "r" => match rest.parse::<f64>() {
                Ok(r) if r > 0.0 && r <= 100.0 => Ok(PageHeuristic::R(r)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for PageHeuristic {
    type Error = DetectError;
    fn try_from(s: String) -> Result<Self, DetectError> {
        s.parse()
    }
}

impl From<PageHeuristic> for String {
    fn from(h: PageHeuristic) -> String {
        h.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageVerdict {
    pub breaking: bool,
    pub broken_count: usize,
    pub broken_ratio: f64,
    pub offending_roots: Vec<NodeId>,
    pub heuristic_used: String,
}

/// Applies a heuristic to per-subtree labels; `roots` (same length) name the
/// offending subtrees.
pub fn apply_heuristic(
    labels: &[SubtreeLabel],
    roots: &[NodeId],
    h: PageHeuristic,
    cmp: Comparison,
) -> PageVerdict {
    let broken: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == SubtreeLabel::Broken).collect();
    let count = broken.len();
    let ratio = if labels.is_empty() { 0.0 } else { count as f64 / labels.len() as f64 };
    let breaking = match h {
        PageHeuristic::K(k) => cmp.holds(count as f64, k as f64),
        PageHeuristic::R(r) => !labels.is_empty() && cmp.holds(ratio, r / 100.0),
    };
    PageVerdict {
        breaking,
        broken_count: count,
        broken_ratio: ratio,
        offending_roots: broken.iter().filter_map(|&i| roots.get(i).copied()).collect(),
        heuristic_used: format!("SINBAD-{}", h.to_string().to_uppercase()),
    }
}

pub fn page_verdict_k(predictions: &[SubtreeLabel], k: u32) -> PageVerdict {
    assert!(k >= 1, "k must be positive");
    apply_heuristic(predictions, &[], PageHeuristic::K(k), Comparison::AtLeast)
}

pub fn page_verdict_r(predictions: &[SubtreeLabel], r: f64) -> PageVerdict {
    assert!(r > 0.0 && r <= 100.0, "r must lie in (0, 100]");
    apply_heuristic(predictions, &[], PageHeuristic::R(r), Comparison::AtLeast)
}

/// Element kinds counted by the baseline heuristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Requests,
    Images,
    Buttons,
    Text,
    Iframes,
    Videos,
    Inputs,
    Links,
    Scripts,
}

impl ElementKind {
    pub const ALL: [ElementKind; 9] = [
        ElementKind::Requests,
        ElementKind::Images,
        ElementKind::Buttons,
        ElementKind::Text,
        ElementKind::Iframes,
        ElementKind::Videos,
        ElementKind::Inputs,
        ElementKind::Links,
        ElementKind::Scripts,
    ];
}

/// Count of each element kind in a snapshot. DOM kinds count visible,
/// rendered nodes only.
pub fn element_counts(s: &Snapshot) -> BTreeMap<ElementKind, f64> {
    let mut c: BTreeMap<ElementKind, f64> = ElementKind::ALL.iter().map(|k| (*k, 0.0)).collect();
    c.insert(ElementKind::Requests, s.requests.len() as f64);
    c.insert(ElementKind::Scripts, s.scripts().len() as f64);
    for n in s.nodes.iter().filter(|n| n.cues.is_rendered()) {
        let kind = match n.tag.as_str() {
            "img" | "picture" => Some(ElementKind::Images),
            "button" => Some(ElementKind::Buttons),
            "iframe" => Some(ElementKind::Iframes),
            "video" => Some(ElementKind::Videos),
            "input" | "textarea" | "select" => Some(ElementKind::Inputs),
            "a" => Some(ElementKind::Links),
            t if tag_group(t) == TagGroup::Text && !n.cues.text.is_empty() => Some(ElementKind::Text),
            _ => None,
        };
        if let Some(k) = kind {
            *c.get_mut(&k).unwrap() += 1.0;
        }
    }
    c
}

/// Count changes `after - before` per kind.
pub fn count_deltas(before: &Snapshot, after: &Snapshot) -> BTreeMap<ElementKind, f64> {
    let a = element_counts(before);
    let b = element_counts(after);
    ElementKind::ALL.iter().map(|k| (*k, b[k] - a[k])).collect()
}

fn baseline_name(prefix: &str, kinds: &[ElementKind], t: f64) -> String {
    let ks: Vec<String> = kinds
        .iter()
        .map(|k| match k {
            ElementKind::Requests => "REQ".to_string(),
            other => format!("{other:?}").to_uppercase(),
        })
        .collect();
    format!("{prefix}-{}{}", ks.join("+"), t)
}

/// Breaking when the mean absolute count change over `kinds` exceeds `k`.
pub fn baseline_count(deltas: &BTreeMap<ElementKind, f64>, kinds: &[ElementKind], k: f64) -> PageVerdict {
    assert!(!kinds.is_empty(), "kinds must be nonempty");
    let avg = kinds.iter().map(|e| deltas.get(e).copied().unwrap_or(0.0).abs()).sum::<f64>() / kinds.len() as f64;
    PageVerdict {
        breaking: avg > k,
        broken_count: 0,
        broken_ratio: 0.0,
        offending_roots: Vec::new(),
        heuristic_used: baseline_name("COUNT", kinds, k),
    }
}

/// Breaking when the mean of `|delta| / total` over `kinds` exceeds `r`
/// percent. Kinds with a zero total contribute 0.
pub fn baseline_ratio(
    deltas: &BTreeMap<ElementKind, f64>,
    totals: &BTreeMap<ElementKind, f64>,
    kinds: &[ElementKind],
    r: f64,
) -> PageVerdict {
    assert!(!kinds.is_empty(), "kinds must be nonempty");
    let avg = kinds
        .iter()
        .map(|e| {
            let t = totals.get(e).copied().unwrap_or(0.0);
            if t > 0.0 {
                deltas.get(e).copied().unwrap_or(0.0).abs() / t
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / kinds.len() as f64;
    PageVerdict {
        breaking: avg > r / 100.0,
        broken_count: 0,
        broken_ratio: 0.0,
        offending_roots: Vec::new(),
        heuristic_used: baseline_name("RATIO", kinds, r),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BaselineRule {
    Count { k: f64 },
    Ratio { r: f64 },
}

/// Runs a baseline on the no-list and breaking-list snapshots.
pub fn evaluate_baseline(rule: BaselineRule, kinds: &[ElementKind], none: &Snapshot, breaking: &Snapshot) -> PageVerdict {
    let d = count_deltas(none, breaking);
    match rule {
        BaselineRule::Count { k } => baseline_count(&d, kinds, k),
        BaselineRule::Ratio { r } => baseline_ratio(&d, &element_counts(none), kinds, r),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub heuristic: PageHeuristic,
    pub comparison: Comparison,
    /// Override predictions that the N→F diff contradicts.
    pub cross_check: bool,
    pub salient_threshold: f64,
    pub segment: SegmentConfig,
    pub diff: DiffConfig,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            heuristic: PageHeuristic::K(1),
            comparison: Comparison::AtLeast,
            cross_check: true,
            salient_threshold: crate::saliency::DEFAULT_SALIENT_THRESHOLD,
            segment: SegmentConfig::default(),
            diff: DiffConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub transition: TransitionKind,
    pub kind: DeltaKind,
    pub root: NodeId,
    pub root_tag: String,
    pub member_count: usize,
    pub predicted: SubtreeLabel,
    /// Model probability of the predicted label.
    pub probability: f64,
    /// Whether the cross-check replaced the model's label.
    pub overridden: bool,
    /// Counted by the page heuristic (N→B and B→F only).
    pub counted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub saliency: Duration,
    pub diff: Duration,
    pub features: Duration,
    pub classify: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub page_url: String,
    pub model_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saliency_model_version: Option<String>,
    pub deltas: Vec<DeltaReport>,
    pub verdict: PageVerdict,
    /// Wall-clock timings; left out of the JSON so reports are reproducible.
    #[serde(skip)]
    pub timings: StageTimings,
}

impl PipelineReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("page: {}\n", self.page_url));
        s.push_str(&format!(
            "verdict: {} ({}, {} broken of {} counted, ratio {:.3})\n",
            if self.verdict.breaking { "BREAKING" } else { "non-breaking" },
            self.verdict.heuristic_used,
            self.verdict.broken_count,
            self.deltas.iter().filter(|d| d.counted).count(),
            self.verdict.broken_ratio,
        ));
        if !self.verdict.offending_roots.is_empty() {
            let roots: Vec<String> = self.verdict.offending_roots.iter().map(|r| r.0.to_string()).collect();
            s.push_str(&format!("offending roots: {}\n", roots.join(", ")));
        }
        s.push_str(&format!("model: {}\n", self.model_version));
        for d in &self.deltas {
            s.push_str(&format!(
                "  {} {} root={} <{}> members={} -> {} p={:.3}{}\n",
                d.transition.as_str(),
                d.kind.as_str(),
                d.root.0,
                d.root_tag,
                d.member_count,
                d.predicted.as_str(),
                d.probability,
                if d.overridden { " (cross-checked)" } else { "" },
            ));
        }
        s
    }
}

fn check_triple(n: &Snapshot, b: &Snapshot, f: Option<&Snapshot>) -> Result<(), DetectError> {
    let mut problems = Vec::new();
    if n.condition != Condition::None {
        problems.push(format!("first snapshot has condition {:?}, expected none", n.condition));
    }
    if b.condition != Condition::Breaking {
        problems.push(format!("second snapshot has condition {:?}, expected breaking", b.condition));
    }
    if b.page_url != n.page_url {
        problems.push(format!("page urls differ: {} vs {}", n.page_url, b.page_url));
    }
    if let Some(f) = f {
        if f.condition != Condition::Fixed {
            problems.push(format!("third snapshot has condition {:?}, expected fixed", f.condition));
        }
        if f.page_url != n.page_url {
            problems.push(format!("page urls differ: {} vs {}", n.page_url, f.page_url));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(DetectError::ConditionMismatch(problems.join("; ")))
    }
}

fn label_index(m: &TreeEnsembleModel) -> Result<[usize; 3], DetectError> {
    let find = |l: SubtreeLabel| m.classes.iter().position(|c| c == l.as_str());
    match (find(SubtreeLabel::Broken), find(SubtreeLabel::Legitimate), find(SubtreeLabel::Neutral)) {
        (Some(b), Some(l), Some(n)) => Ok([b, l, n]),
        _ => Err(DetectError::ModelClasses(m.classes.clone())),
    }
}

/// Fills in `salient_blocks` from the saliency model when a snapshot does
/// not carry them.
fn with_salient(s: &Snapshot, model: Option<&TreeEnsembleModel>, cfg: &DetectConfig) -> Result<Snapshot, DetectError> {
    let mut s = s.clone();
    if s.salient_blocks.is_none() {
        if let Some(m) = model {
            let (_, scored) = score_page(&s, m, &cfg.segment)?;
            s.salient_blocks = Some(salient_node_sets(&scored, cfg.salient_threshold));
        }
    }
    Ok(s)
}

/// Trainer for the subtree classifier: gradient-boosted trees on SMOTE
/// output.
pub fn breakage_trainer(seed: u64) -> Trainer {
    Trainer::new(EnsembleKind::GradientBoosted)
        .with_hyperparams(Hyperparams::gradient_boosted())
        .with_resample(Some(ResampleStrategy::Smote))
        .with_seed(seed)
}

/// Diffs a visit triple, classifies every delta and applies the page
/// heuristic. Without a fixed snapshot only N→B is evaluated and nothing is
/// cross-checked.
pub fn run_pipeline(
    none: &Snapshot,
    breaking: &Snapshot,
    fixed: Option<&Snapshot>,
    saliency_model: Option<&TreeEnsembleModel>,
    model: &TreeEnsembleModel,
    cfg: &DetectConfig,
) -> Result<PipelineReport, DetectError> {
    check_triple(none, breaking, fixed)?;
    model.check_feature_names(&feature_names())?;
    let idx = label_index(model)?;
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let n = with_salient(none, saliency_model, cfg)?;
    let b = with_salient(breaking, saliency_model, cfg)?;
    let f = fixed.map(|f| with_salient(f, saliency_model, cfg)).transpose()?;
    timings.saliency = t.elapsed();

    let t = Instant::now();
    let mut snaps: Vec<&Snapshot> = vec![&n, &b];
    if let Some(f) = &f {
        snaps.push(f);
    }
    let envs: Vec<EnvironmentGraph> = snaps.iter().map(|s| EnvironmentGraph::build(s)).collect();
    // (transition, from, to)
    let mut plan = vec![(TransitionKind::NoneToBreaking, 0usize, 1usize)];
    if f.is_some() {
        plan.insert(0, (TransitionKind::NoneToFixed, 0, 2));
        plan.push((TransitionKind::BreakingToFixed, 1, 2));
    }
    let diffs: Vec<DiffResult> = plan.iter().map(|&(_, i, j)| diff_with(snaps[i], snaps[j], &cfg.diff)).collect();
    let diff_nf = plan.iter().position(|p| p.0 == TransitionKind::NoneToFixed).map(|i| &diffs[i]);
    timings.diff = t.elapsed();

    let mut rows = Vec::new();
    let t = Instant::now();
    for (&(tr, i, j), diff) in plan.iter().zip(&diffs) {
        let salient = SalientSets::from_snapshots(snaps[i], snaps[j]);
        let glob = extract_global_features(diff, snaps[i], snaps[j], &envs[i], &envs[j]);
        for delta in &diff.deltas {
            let sub = extract_subtree_features(delta, diff, snaps[i], snaps[j], &envs[i], &envs[j], &salient);
            rows.push((tr, delta, assemble_row(&sub, &glob, None).map_err(crate::Error::from)?));
        }
    }
    timings.features = t.elapsed();

    let t = Instant::now();
    let mut deltas = Vec::with_capacity(rows.len());
    for (tr, delta, row) in rows {
        let p = model.predict_proba(&row.values)?;
        let best = argmax(&p);
        let mut predicted = SubtreeLabel::ALL[idx.iter().position(|&c| c == best).unwrap_or(1)];
        let probability = p[best];
        let mut overridden = false;
        if cfg.cross_check && predicted == SubtreeLabel::Broken {
            if let Some(nf) = diff_nf {
                let reference = match (tr, delta.kind) {
                    (TransitionKind::NoneToBreaking, DeltaKind::Removed | DeltaKind::Edited) => {
                        Some(SubtreeLabel::Legitimate)
                    }
                    (TransitionKind::BreakingToFixed, DeltaKind::Added) => Some(SubtreeLabel::Neutral),
                    _ => None,
                };
                if let Some(l) = reference {
                    if also_in_nf(delta, nf) {
                        predicted = l;
                        overridden = true;
                    }
                }
            }
        }
        deltas.push(DeltaReport {
            transition: tr,
            kind: delta.kind,
            root: delta.root,
            root_tag: delta.root_node.tag.clone(),
            member_count: delta.members.len(),
            predicted,
            probability,
            overridden,
            counted: tr != TransitionKind::NoneToFixed,
        });
    }
    timings.classify = t.elapsed();

    let counted: Vec<&DeltaReport> = deltas.iter().filter(|d| d.counted).collect();
    let labels: Vec<SubtreeLabel> = counted.iter().map(|d| d.predicted).collect();
    let roots: Vec<NodeId> = counted.iter().map(|d| d.root).collect();
    let mut verdict = apply_heuristic(&labels, &roots, cfg.heuristic, cfg.comparison);
    verdict.offending_roots.dedup();

    Ok(PipelineReport {
        page_url: none.page_url.clone(),
        model_version: model.model_version.clone(),
        saliency_model_version: saliency_model.map(|m| m.model_version.clone()),
        deltas,
        verdict,
        timings,
    })
}

/// Runs the pipeline over many pages in parallel; results keep input order.
pub fn run_batch(
    pages: &[(Snapshot, Snapshot, Option<Snapshot>)],
    saliency_model: Option<&TreeEnsembleModel>,
    model: &TreeEnsembleModel,
    cfg: &DetectConfig,
) -> Vec<Result<PipelineReport, DetectError>> {
    pages
        .par_iter()
        .map(|(n, b, f)| run_pipeline(n, b, f.as_ref(), saliency_model, model, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use SubtreeLabel::*;

    fn labels(broken: usize, total: usize) -> Vec<SubtreeLabel> {
        (0..total).map(|i| if i < broken { Broken } else { Legitimate }).collect()
    }

    #[test]
    fn k_heuristic() {
        assert!(page_verdict_k(&labels(1, 10), 1).breaking);
        assert!(!page_verdict_k(&labels(0, 10), 1).breaking);
        assert!(!page_verdict_k(&labels(2, 10), 3).breaking);
    }

    #[test]
    fn r_heuristic() {
        assert!(page_verdict_r(&labels(1, 10), 10.0).breaking);
        assert!(!page_verdict_r(&labels(1, 10), 20.0).breaking);
        let empty = page_verdict_r(&[], 10.0);
        assert!(!empty.breaking);
        assert_eq!(empty.broken_ratio, 0.0);
    }

    #[test]
    fn more_than_reading() {
        let v = apply_heuristic(&labels(1, 10), &[], PageHeuristic::K(1), Comparison::MoreThan);
        assert!(!v.breaking);
    }

    #[test]
    fn heuristic_names() {
        assert_eq!("k3".parse::<PageHeuristic>().unwrap(), PageHeuristic::K(3));
        assert_eq!("R10".parse::<PageHeuristic>().unwrap(), PageHeuristic::R(10.0));
        assert!("k0".parse::<PageHeuristic>().is_err());
        assert!("x1".parse::<PageHeuristic>().is_err());
    }

    #[test]
    fn count_baseline() {
        let d: BTreeMap<_, _> = [(ElementKind::Requests, 2.0)].into();
        assert!(baseline_count(&d, &[ElementKind::Requests], 1.0).breaking);
        let zero: BTreeMap<_, _> = ElementKind::ALL.iter().map(|k| (*k, 0.0)).collect();
        assert!(!baseline_count(&zero, &ElementKind::ALL, 0.0).breaking);
        let d: BTreeMap<_, _> =
            [(ElementKind::Images, 3.0), (ElementKind::Buttons, 0.0), (ElementKind::Text, 0.0)].into();
        let v = baseline_count(&d, &[ElementKind::Images, ElementKind::Buttons, ElementKind::Text], 1.0);
        assert!(!v.breaking);
        assert_eq!(baseline_count(&d, &[ElementKind::Requests], 1.0).heuristic_used, "COUNT-REQ1");
    }

    #[test]
    fn ratio_baseline() {
        let d: BTreeMap<_, _> = [(ElementKind::Images, -1.0)].into();
        let t: BTreeMap<_, _> = [(ElementKind::Images, 10.0)].into();
        assert!(baseline_ratio(&d, &t, &[ElementKind::Images], 5.0).breaking);
        let zero: BTreeMap<_, _> = [(ElementKind::Images, 0.0)].into();
        assert!(!baseline_ratio(&zero, &t, &[ElementKind::Images], 5.0).breaking);
    }
}
