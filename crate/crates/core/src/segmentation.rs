//! Top-down, VIPS-style page segmentation.
//!
//! Each round visits the current leaf blocks. A block is a run of sibling
//! subtrees; while it holds a single visible subtree the block descends into
//! that subtree's children (the container becomes a *container member* of
//! the block). Consecutive sibling groups are separated by candidate
//! separators, each scored from the cues below, and the block is split at
//! every candidate that reaches the maximum weight, provided that weight is
//! above the split threshold. Rounds only ever split leaves, so round `r + 1`
//! refines round `r`.
//!
//! | separator cue                              | default weight |
//! |--------------------------------------------|----------------|
//! | divider element (`<hr>`, separator role)   | 1.0            |
//! | media boundary (iframe, embed, img, video) | 0.9            |
//! | background colour change                   | 0.8            |
//! | font change between text runs              | 0.5            |

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snapshot::{DomNode, DomTree, NodeId, Rect, Snapshot};

/// Pages below this element count are segmented with a warning.
pub const SMALL_PAGE_ELEMENTS: usize = 64;

const MEDIA_TAGS: &[&str] = &["object", "embed", "iframe", "video", "img", "audio", "picture", "canvas"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    pub rounds: usize,
    pub divider_weight: f64,
    pub media_weight: f64,
    pub background_weight: f64,
    pub font_weight: f64,
    pub split_threshold: f64,
    /// Font-size difference (px) that counts as a font change.
    pub font_size_delta: f64,
    /// Font-weight difference that counts as a font change.
    pub font_weight_delta: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            rounds: 6,
            divider_weight: 1.0,
            media_weight: 0.9,
            background_weight: 0.8,
            font_weight: 0.5,
            split_threshold: 0.4,
            font_size_delta: 1.0,
            font_weight_delta: 100.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("page has no visible nodes")]
    EmptyPage,
    #[error("rounds must be at least 1")]
    ZeroRounds,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(pub u32);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    /// All member nodes in document order.
    pub members: Vec<NodeId>,
    /// Members that were absorbed as containers while descending. Their
    /// boxes span several blocks, so they do not contribute to `bbox`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub containers: Vec<NodeId>,
    pub bbox: Rect,
    pub children: Vec<BlockId>,
    pub round_created: usize,
    #[serde(skip)]
    items: Vec<NodeId>,
}

impl Block {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Members that are not containers.
    pub fn content_members(&self) -> impl Iterator<Item = NodeId> + '_ {
        let containers: HashSet<NodeId> = self.containers.iter().copied().collect();
        self.members.iter().copied().filter(move |m| !containers.contains(m))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockHierarchy {
    pub root: BlockId,
    pub rounds: usize,
    /// Indexed by `BlockId`.
    pub blocks: Vec<Block>,
}

impl BlockHierarchy {
    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id.0 as usize]
    }

    pub fn root_block(&self) -> &Block {
        self.block(self.root)
    }
}

pub fn segment_page(s: &Snapshot, rounds: usize) -> Result<BlockHierarchy, SegmentError> {
    segment_with(s, &SegmentConfig { rounds, ..SegmentConfig::default() })
}

pub fn segment_with(s: &Snapshot, cfg: &SegmentConfig) -> Result<BlockHierarchy, SegmentError> {
    if cfg.rounds == 0 {
        return Err(SegmentError::ZeroRounds);
    }
    let tree = s.tree();
    let root = tree.root().ok_or(SegmentError::EmptyPage)?;
    if !s.nodes.iter().any(|n| n.cues.is_rendered()) {
        return Err(SegmentError::EmptyPage);
    }
    if s.nodes.len() < SMALL_PAGE_ELEMENTS {
        log::warn!(
            "{}: only {} elements (< {SMALL_PAGE_ELEMENTS}); segmentation may be coarse",
            s.page_url,
            s.nodes.len()
        );
    }

    let seg = Segmenter { tree: &tree, cfg, order: tree.order_index() };
    let mut blocks = vec![seg.make_block(BlockId(0), vec![root], Vec::new(), 0)];
    let mut frontier = vec![BlockId(0)];
    for round in 1..=cfg.rounds {
        let mut next = Vec::new();
        for id in frontier {
            let (items, containers) = {
                let b = &blocks[id.0 as usize];
                (b.items.clone(), b.containers.clone())
            };
            if let Some(parts) = seg.split(items, containers) {
                for (items, containers) in parts {
                    let child_id = BlockId(blocks.len() as u32);
                    blocks.push(seg.make_block(child_id, items, containers, round));
                    blocks[id.0 as usize].children.push(child_id);
                    next.push(child_id);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(BlockHierarchy { root: BlockId(0), rounds: cfg.rounds, blocks })
}

/// Blocks without children, in document order of their first member.
pub fn leaf_blocks(h: &BlockHierarchy) -> Vec<&Block> {
    // children are created in document order, so a pre-order walk suffices
    let mut out = Vec::new();
    let mut stack = vec![h.root];
    while let Some(id) = stack.pop() {
        let b = h.block(id);
        if b.is_leaf() {
            out.push(b);
        } else {
            stack.extend(b.children.iter().rev());
        }
    }
    out
}

struct Segmenter<'t, 'a> {
    tree: &'t DomTree<'a>,
    cfg: &'t SegmentConfig,
    order: std::collections::HashMap<NodeId, usize>,
}

struct Group {
    items: Vec<NodeId>,
    /// The visible, non-divider item the group is built around.
    anchor: Option<NodeId>,
}

impl<'t, 'a> Segmenter<'t, 'a> {
    fn node(&self, id: NodeId) -> &'a DomNode {
        self.tree.node(id).expect("validated snapshot")
    }

    fn make_block(&self, id: BlockId, items: Vec<NodeId>, containers: Vec<NodeId>, round: usize) -> Block {
        let mut members: Vec<NodeId> = containers.clone();
        for &it in &items {
            members.extend(self.tree.subtree(it));
        }
        members.sort_by_key(|m| self.order.get(m).copied().unwrap_or(usize::MAX));
        let container_set: HashSet<NodeId> = containers.iter().copied().collect();
        let rects: Vec<Rect> = members
            .iter()
            .filter(|m| !container_set.contains(m))
            .map(|&m| self.node(m))
            .filter(|n| n.cues.is_rendered())
            .map(|n| n.cues.rect())
            .collect();
        let bbox = Rect::bounding(&rects).unwrap_or_default();
        let mut containers = containers;
        containers.sort_by_key(|m| self.order.get(m).copied().unwrap_or(usize::MAX));
        Block { id, members, containers, bbox, children: Vec::new(), round_created: round, items }
    }

    fn subtree_rendered(&self, id: NodeId) -> bool {
        self.tree.subtree(id).into_iter().any(|n| self.node(n).cues.is_rendered())
    }

    fn is_divider(&self, id: NodeId) -> bool {
        let n = self.node(id);
        n.tag == "hr"
            || n.attrs.get("role") == Some("separator")
            || n.attrs.class_list.iter().any(|c| c == "divider" || c == "separator")
    }

    fn is_media(&self, id: NodeId) -> bool {
        let n = self.node(id);
        if MEDIA_TAGS.contains(&n.tag.as_str()) {
            return true;
        }
        let area = n.cues.area();
        area > 0.0
            && self.tree.subtree(id).into_iter().skip(1).any(|d| {
                let dn = self.node(d);
                MEDIA_TAGS.contains(&dn.tag.as_str()) && dn.cues.is_rendered() && dn.cues.area() >= 0.5 * area
            })
    }

    /// Groups items so that every group holds exactly one visible,
    /// non-divider anchor; invisible items and dividers stick to the
    /// preceding group (or the following one at the start).
    fn glue(&self, items: &[NodeId]) -> Vec<Group> {
        let mut groups: Vec<Group> = Vec::new();
        let mut pending: Vec<NodeId> = Vec::new();
        for &it in items {
            let anchor_like = !self.is_divider(it) && self.subtree_rendered(it);
            if anchor_like {
                let mut g = Group { items: std::mem::take(&mut pending), anchor: Some(it) };
                g.items.push(it);
                groups.push(g);
            } else if let Some(last) = groups.last_mut() {
                last.items.push(it);
            } else {
                pending.push(it);
            }
        }
        if !pending.is_empty() {
            groups.push(Group { items: pending, anchor: None });
        }
        groups
    }

    fn font_of(&self, g: &Group) -> Option<(f64, f64)> {
        let (mut chars, mut size, mut weight) = (0.0, 0.0, 0.0);
        for &it in &g.items {
            for d in self.tree.subtree(it) {
                let n = self.node(d);
                if n.cues.is_rendered() && !n.cues.text.trim().is_empty() {
                    let c = n.cues.text.chars().count() as f64;
                    chars += c;
                    size += c * n.cues.font_size;
                    weight += c * n.cues.font_weight;
                }
            }
        }
        (chars > 0.0).then(|| (size / chars, weight / chars))
    }

    fn gap_weight(&self, left: &Group, right: &Group) -> f64 {
        let mut w: f64 = 0.0;
        let ends_with_divider = left.items.last().is_some_and(|&i| self.is_divider(i));
        let starts_with_divider = right.items.first().is_some_and(|&i| self.is_divider(i));
        if ends_with_divider || starts_with_divider {
            w = w.max(self.cfg.divider_weight);
        }
        if let (Some(a), Some(b)) = (left.anchor, right.anchor) {
            if self.is_media(a) || self.is_media(b) {
                w = w.max(self.cfg.media_weight);
            }
            if self.node(a).cues.background != self.node(b).cues.background {
                w = w.max(self.cfg.background_weight);
            }
        }
        if let (Some((sa, wa)), Some((sb, wb))) = (self.font_of(left), self.font_of(right)) {
            if (sa - sb).abs() > self.cfg.font_size_delta || (wa - wb).abs() >= self.cfg.font_weight_delta {
                w = w.max(self.cfg.font_weight);
            }
        }
        w
    }

    /// Splits a block given by its subtree roots and containers, or `None`
    /// when no separator clears the threshold.
    fn split(
        &self,
        mut items: Vec<NodeId>,
        mut containers: Vec<NodeId>,
    ) -> Option<Vec<(Vec<NodeId>, Vec<NodeId>)>> {
        loop {
            let groups = self.glue(&items);
            if groups.len() >= 2 {
                let weights: Vec<f64> = groups.windows(2).map(|w| self.gap_weight(&w[0], &w[1])).collect();
                let max = weights.iter().copied().fold(0.0, f64::max);
                if max <= self.cfg.split_threshold {
                    return None;
                }
                let mut parts: Vec<(Vec<NodeId>, Vec<NodeId>)> = vec![(Vec::new(), containers)];
                for (i, g) in groups.into_iter().enumerate() {
                    if i > 0 && weights[i - 1] == max {
                        parts.push((Vec::new(), Vec::new()));
                    }
                    parts.last_mut().unwrap().0.extend(g.items);
                }
                return Some(parts);
            }
            // a single group: descend into its anchor
            let group = groups.into_iter().next()?;
            let anchor = group.anchor?;
            let children = self.node(anchor).children.clone();
            if children.is_empty() {
                return None;
            }
            for it in group.items {
                if it == anchor {
                    containers.push(it);
                } else {
                    // glued invisible siblings ride along as containers
                    containers.extend(self.tree.subtree(it));
                }
            }
            items = children;
        }
    }
}
