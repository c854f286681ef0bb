//! Web saliency: per-block features, the saliency classifier and
//! saliency-weighted interaction planning.
//!
//! Block features are computed over a block's content members (containers
//! are excluded). "Global" features are computed over the union of all leaf
//! blocks of the page. Each node belongs to exactly one of four classes:
//! functional (interactive tags, taking precedence), layout, text, other.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{tag_group, TagGroup};
use crate::learn::{Dataset, EnsembleKind, Hyperparams, LearnError, ResampleStrategy, Trainer, TreeEnsembleModel};
use crate::segmentation::{leaf_blocks, segment_with, Block, BlockHierarchy, BlockId, SegmentConfig};
use crate::snapshot::{DomNode, InteractionKind, NodeId, Snapshot};

pub const SALIENT_CLASS: &str = "salient";
pub const OTHER_CLASS: &str = "non_salient";
pub const DEFAULT_SALIENT_THRESHOLD: f64 = 0.5;

const FUNCTIONAL: &[&str] = &["a", "button", "input", "select", "textarea", "form"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaliencyCategory {
    Content,
    Positional,
    Visual,
    Structural,
}

/// Feature names in order of importance.
pub const FEATURES: [(&str, SaliencyCategory); 31] = {
    use SaliencyCategory::*;
    [
        ("pct_layout_nodes_in_group", Content),
        ("total_class_attrs", Content),
        ("pct_layout_nodes_from_global", Content),
        ("mean_x_all_groups", Positional),
        ("group_width", Visual),
        ("has_id_attr", Content),
        ("pct_text_nodes", Content),
        ("total_functional_nodes_global", Structural),
        ("pct_class_attrs", Content),
        ("total_layout_nodes_in_group", Structural),
        ("center_x", Positional),
        ("center_y", Positional),
        ("total_layout_nodes_all_groups", Structural),
        ("text_entropy", Content),
        ("class_entropy", Content),
        ("total_text_nodes_all_groups", Structural),
        ("total_nodes_all_groups", Structural),
        ("total_text_length", Content),
        ("mean_color_vibrancy", Visual),
        ("total_nodes_in_group", Structural),
        ("pct_functional_from_global", Content),
        ("total_functional_nodes_in_group", Structural),
        ("total_text_nodes_in_group", Structural),
        ("group_height", Visual),
        ("pct_functional_nodes_in_group", Content),
        ("group_size", Visual),
        ("centrality", Positional),
        ("mean_font_size", Visual),
        ("mean_y_all_groups", Positional),
        ("pct_text_from_global", Content),
        ("mean_font_weight", Visual),
    ]
};

pub fn feature_names() -> Vec<String> {
    FEATURES.iter().map(|(n, _)| n.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Functional,
    Layout,
    Text,
    Other,
}

pub fn node_class(tag: &str) -> NodeClass {
    if FUNCTIONAL.contains(&tag) {
        return NodeClass::Functional;
    }
    match tag_group(tag) {
        TagGroup::Layout => NodeClass::Layout,
        TagGroup::Text => NodeClass::Text,
        _ => NodeClass::Other,
    }
}

/// `e^{-10((x - 0.5)^2 + (y - 0.5)^2)}` on normalized coordinates.
pub fn centrality(x: f64, y: f64) -> f64 {
    (-10.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp()
}

/// Shannon entropy (natural log) of a frequency table.
pub fn entropy<T: Ord>(items: impl IntoIterator<Item = T>) -> f64 {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    let mut n = 0usize;
    for it in items {
        *counts.entry(it).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyFeatureVector {
    pub values: Vec<f64>,
}

impl SaliencyFeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURES.iter().position(|(n, _)| *n == name).map(|i| self.values[i])
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Default)]
struct ClassCounts {
    total: usize,
    functional: usize,
    layout: usize,
    text: usize,
}

fn count_classes<'a>(nodes: impl Iterator<Item = &'a DomNode>) -> ClassCounts {
    let mut c = ClassCounts::default();
    for n in nodes {
        c.total += 1;
        match node_class(&n.tag) {
            NodeClass::Functional => c.functional += 1,
            NodeClass::Layout => c.layout += 1,
            NodeClass::Text => c.text += 1,
            NodeClass::Other => {}
        }
    }
    c
}

fn normalized_center(b: &Block, page: (f64, f64)) -> (f64, f64) {
    let (cx, cy) = b.bbox.center();
    let nx = if page.0 > 0.0 { cx / page.0 } else { 0.5 };
    let ny = if page.1 > 0.0 { cy / page.1 } else { 0.5 };
    (nx.clamp(0.0, 1.0), ny.clamp(0.0, 1.0))
}

/// The 31 features of `b`. `all` is the set of blocks the global features
/// range over (normally the page's leaf blocks).
pub fn extract_block_features(s: &Snapshot, b: &Block, all: &[&Block]) -> SaliencyFeatureVector {
    let tree = s.tree();
    let page = s.page_size();
    let members: Vec<&DomNode> = b.content_members().filter_map(|id| tree.node(id)).collect();
    let group = count_classes(members.iter().copied());
    let mut seen = HashSet::new();
    let global_nodes: Vec<&DomNode> = all
        .iter()
        .flat_map(|blk| blk.content_members())
        .filter(|id| seen.insert(*id))
        .filter_map(|id| tree.node(id))
        .collect();
    let global = count_classes(global_nodes.iter().copied());

    let (cx, cy) = normalized_center(b, page);
    let centers: Vec<(f64, f64)> = all.iter().map(|blk| normalized_center(blk, page)).collect();
    let mean = |f: fn(&(f64, f64)) -> f64| {
        if centers.is_empty() {
            0.0
        } else {
            centers.iter().map(f).sum::<f64>() / centers.len() as f64
        }
    };
    let n = members.len();
    let mean_of = |f: &dyn Fn(&DomNode) -> f64| {
        if n == 0 {
            0.0
        } else {
            members.iter().map(|m| f(m)).sum::<f64>() / n as f64
        }
    };
    let classes: Vec<&str> = members.iter().flat_map(|m| m.attrs.class_list.iter().map(String::as_str)).collect();
    let text_len: usize = members.iter().map(|m| m.cues.text.chars().count()).sum();

    let mut v = BTreeMap::new();
    v.insert("pct_layout_nodes_in_group", ratio(group.layout, group.total));
    v.insert("total_class_attrs", classes.len() as f64);
    v.insert("pct_layout_nodes_from_global", ratio(group.layout, global.layout));
    v.insert("mean_x_all_groups", mean(|c| c.0));
    v.insert("group_width", b.bbox.width);
    v.insert("has_id_attr", members.iter().any(|m| m.attrs.html_id.is_some()) as u8 as f64);
    v.insert("pct_text_nodes", ratio(group.text, group.total));
    v.insert("total_functional_nodes_global", global.functional as f64);
    v.insert(
        "pct_class_attrs",
        ratio(members.iter().filter(|m| !m.attrs.class_list.is_empty()).count(), n),
    );
    v.insert("total_layout_nodes_in_group", group.layout as f64);
    v.insert("center_x", cx);
    v.insert("center_y", cy);
    v.insert("total_layout_nodes_all_groups", global.layout as f64);
    v.insert("text_entropy", entropy(members.iter().flat_map(|m| m.cues.text.chars())));
    v.insert("class_entropy", entropy(classes.iter().copied()));
    v.insert("total_text_nodes_all_groups", global.text as f64);
    v.insert("total_nodes_all_groups", global.total as f64);
    v.insert("total_text_length", text_len as f64);
    v.insert("mean_color_vibrancy", mean_of(&|m| m.cues.background.vibrancy()));
    v.insert("total_nodes_in_group", group.total as f64);
    v.insert("pct_functional_from_global", ratio(group.functional, global.functional));
    v.insert("total_functional_nodes_in_group", group.functional as f64);
    v.insert("total_text_nodes_in_group", group.text as f64);
    v.insert("group_height", b.bbox.height);
    v.insert("pct_functional_nodes_in_group", ratio(group.functional, group.total));
    v.insert("group_size", b.bbox.area());
    v.insert("centrality", centrality(cx, cy));
    v.insert("mean_font_size", mean_of(&|m| m.cues.font_size));
    v.insert("mean_y_all_groups", mean(|c| c.1));
    v.insert("pct_text_from_global", ratio(group.text, global.text));
    v.insert("mean_font_weight", mean_of(&|m| m.cues.font_weight));
    debug_assert_eq!(v.len(), FEATURES.len());
    SaliencyFeatureVector { values: FEATURES.iter().map(|(name, _)| v[name]).collect() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledBlock {
    pub features: SaliencyFeatureVector,
    pub salient: bool,
}

pub fn saliency_dataset(data: &[LabeledBlock]) -> Dataset {
    let mut d = Dataset::new(feature_names(), vec![SALIENT_CLASS.into(), OTHER_CLASS.into()]);
    for b in data {
        d.push(b.features.values.clone(), if b.salient { 0 } else { 1 });
    }
    d
}

/// Trainer used for the saliency classifier: 100-tree forest on SMOTE
/// output.
pub fn saliency_trainer(seed: u64) -> Trainer {
    Trainer::new(EnsembleKind::RandomForest)
        .with_hyperparams(Hyperparams::random_forest())
        .with_resample(Some(ResampleStrategy::Smote))
        .with_seed(seed)
}

pub fn train_saliency_model(data: &[LabeledBlock], seed: u64) -> Result<TreeEnsembleModel, LearnError> {
    saliency_trainer(seed).fit(&saliency_dataset(data))
}

/// Probability of the salient class.
pub fn score_block(m: &TreeEnsembleModel, f: &SaliencyFeatureVector) -> Result<f64, LearnError> {
    m.check_feature_names(&feature_names())?;
    let p = m.predict_proba(&f.values)?;
    let c = m.classes.iter().position(|c| c == SALIENT_CLASS).unwrap_or(0);
    Ok(p[c])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredBlock {
    pub block: BlockId,
    pub members: Vec<NodeId>,
    pub probability: f64,
}

/// Segments `s` and scores every leaf block.
pub fn score_page(
    s: &Snapshot,
    m: &TreeEnsembleModel,
    seg: &SegmentConfig,
) -> Result<(BlockHierarchy, Vec<ScoredBlock>), crate::Error> {
    let h = segment_with(s, seg).map_err(|e| crate::Error::Format(e.to_string()))?;
    let leaves = leaf_blocks(&h);
    let mut out = Vec::with_capacity(leaves.len());
    for b in &leaves {
        let f = extract_block_features(s, b, &leaves);
        out.push(ScoredBlock { block: b.id, members: b.members.clone(), probability: score_block(m, &f)? });
    }
    Ok((h, out))
}

/// Member sets of blocks scoring above `threshold`.
pub fn salient_node_sets(scored: &[ScoredBlock], threshold: f64) -> Vec<Vec<NodeId>> {
    scored
        .iter()
        .filter(|b| b.probability > threshold)
        .map(|b| b.members.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionPlan {
    pub target: NodeId,
    pub kind: InteractionKind,
    pub source_block: BlockId,
    pub weight: f64,
}

const TEXT_INPUT_TYPES: &[&str] = &["", "text", "search", "email", "url", "tel", "password", "number"];

/// How a crawler would interact with `n`, if at all.
pub fn interaction_kind(n: &DomNode) -> Option<InteractionKind> {
    match n.tag.as_str() {
        "textarea" => Some(InteractionKind::Type),
        "input" => {
            let t = n.attrs.get("type").unwrap_or("").to_ascii_lowercase();
            if TEXT_INPUT_TYPES.contains(&t.as_str()) {
                Some(InteractionKind::Type)
            } else if t == "hidden" {
                None
            } else {
                Some(InteractionKind::Click)
            }
        }
        "a" | "button" | "video" | "audio" | "select" | "summary" => Some(InteractionKind::Click),
        _ if n.attrs.get("onclick").is_some() || n.attrs.get("role") == Some("button") => {
            Some(InteractionKind::Click)
        }
        _ => None,
    }
}

/// Samples up to `max_plans` single-target interactions. Blocks are drawn
/// with probability proportional to their score, never the same block twice
/// in a row; the target is drawn uniformly from the block's unused
/// interactive, rendered members.
pub fn plan_interactions(
    s: &Snapshot,
    scored: &[(&Block, f64)],
    rng_seed: u64,
    max_plans: usize,
) -> Vec<InteractionPlan> {
    let tree = s.tree();
    let mut pools: Vec<(BlockId, f64, Vec<(NodeId, InteractionKind)>)> = scored
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(b, p)| {
            let targets = b
                .members
                .iter()
                .filter_map(|id| tree.node(*id))
                .filter(|n| n.cues.is_rendered())
                .filter_map(|n| interaction_kind(n).map(|k| (n.id, k)))
                .collect();
            (b.id, *p, targets)
        })
        .filter(|(_, _, t): &(BlockId, f64, Vec<_>)| !t.is_empty())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut plans = Vec::new();
    let mut last: Option<BlockId> = None;
    while plans.len() < max_plans {
        let open: Vec<usize> = (0..pools.len())
            .filter(|&i| Some(pools[i].0) != last && !pools[i].2.is_empty())
            .collect();
        if open.is_empty() {
            break;
        }
        let dist = WeightedIndex::new(open.iter().map(|&i| pools[i].1)).expect("positive weights");
        let bi = open[dist.sample(&mut rng)];
        let (block, weight, targets) = &mut pools[bi];
        let (target, kind) = targets.remove(rng.gen_range(0..targets.len()));
        plans.push(InteractionPlan { target, kind, source_block: *block, weight: *weight });
        last = Some(*block);
    }
    plans
}

/// One entry of an annotation corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    /// Snapshot path, relative to the annotation file.
    pub snapshot: String,
    pub block_id: BlockId,
    pub salient: bool,
}

/// Reads an annotation file and computes features for every annotated
/// block, segmenting each referenced snapshot once.
pub fn load_annotations(path: impl AsRef<Path>, seg: &SegmentConfig) -> Result<Vec<LabeledBlock>, crate::Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    let anns: Vec<Annotation> = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut cache: BTreeMap<String, (Snapshot, BlockHierarchy)> = BTreeMap::new();
    let mut out = Vec::new();
    for a in anns {
        if !cache.contains_key(&a.snapshot) {
            let s = crate::snapshot::read_snapshot(base.join(&a.snapshot))?;
            let h = segment_with(&s, seg).map_err(|e| crate::Error::Format(e.to_string()))?;
            cache.insert(a.snapshot.clone(), (s, h));
        }
        let (s, h) = &cache[&a.snapshot];
        let block = h
            .blocks
            .get(a.block_id.0 as usize)
            .ok_or_else(|| crate::Error::Format(format!("{}: no block {}", a.snapshot, a.block_id.0)))?;
        let leaves = leaf_blocks(h);
        out.push(LabeledBlock { features: extract_block_features(s, block, &leaves), salient: a.salient });
    }
    Ok(out)
}
