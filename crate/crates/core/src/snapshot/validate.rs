use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{InteractionKind, NodeId, Snapshot};

/// One broken invariant of a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    DuplicateId { node: NodeId },
    NoRoot,
    MultipleRoots { roots: Vec<NodeId> },
    DanglingParent { node: NodeId, parent: NodeId },
    DanglingChild { parent: NodeId, child: NodeId },
    /// `child` appears in the child list of `listed_under` but names another parent.
    ChildParentMismatch { listed_under: NodeId, child: NodeId },
    /// `child` names `parent`, which does not list it.
    NotListedByParent { parent: NodeId, child: NodeId },
    DuplicateChild { parent: NodeId, child: NodeId },
    Cycle { nodes: Vec<NodeId> },
    TagNotLowercase { node: NodeId },
    NegativeSize { node: NodeId },
    NegativeFontSize { node: NodeId },
    DanglingInitiator { request: usize, node: NodeId },
    DanglingInteractionTarget { interaction: usize, node: NodeId },
    TypedTextMismatch { interaction: usize },
    BadCauseIndex { error: usize, index: usize },
    DanglingTouch { touch: usize, node: NodeId },
    DanglingSalientMember { block: usize, node: NodeId },
}

impl Violation {
    /// References from requests, interactions, touches or salient sets to
    /// nodes that do not exist.
    pub fn is_dangling_reference(&self) -> bool {
        matches!(
            self,
            Violation::DanglingInitiator { .. }
                | Violation::DanglingInteractionTarget { .. }
                | Violation::DanglingTouch { .. }
                | Violation::DanglingSalientMember { .. }
                | Violation::DanglingParent { .. }
                | Violation::DanglingChild { .. }
        )
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId { node } => write!(f, "duplicate node id {node}"),
            Violation::NoRoot => write!(f, "no root node"),
            Violation::MultipleRoots { roots } => write!(f, "multiple roots: {roots:?}"),
            Violation::DanglingParent { node, parent } => {
                write!(f, "node {node} names missing parent {parent}")
            }
            Violation::DanglingChild { parent, child } => {
                write!(f, "node {parent} lists missing child {child}")
            }
            Violation::ChildParentMismatch { listed_under, child } => {
                write!(f, "node {child} listed under {listed_under} but has another parent")
            }
            Violation::NotListedByParent { parent, child } => {
                write!(f, "node {child} not listed by its parent {parent}")
            }
            Violation::DuplicateChild { parent, child } => {
                write!(f, "node {parent} lists child {child} twice")
            }
            Violation::Cycle { nodes } => write!(f, "parent cycle through {nodes:?}"),
            Violation::TagNotLowercase { node } => write!(f, "tag of {node} is not lowercase"),
            Violation::NegativeSize { node } => write!(f, "negative width or height on {node}"),
            Violation::NegativeFontSize { node } => write!(f, "negative font size on {node}"),
            Violation::DanglingInitiator { request, node } => {
                write!(f, "request {request} initiated by missing node {node}")
            }
            Violation::DanglingInteractionTarget { interaction, node } => {
                write!(f, "interaction {interaction} targets missing node {node}")
            }
            Violation::TypedTextMismatch { interaction } => {
                write!(f, "interaction {interaction}: typed_text must be present iff kind is type")
            }
            Violation::BadCauseIndex { error, index } => {
                write!(f, "error {error} names missing interaction {index}")
            }
            Violation::DanglingTouch { touch, node } => {
                write!(f, "touch {touch} references missing node {node}")
            }
            Violation::DanglingSalientMember { block, node } => {
                write!(f, "salient block {block} references missing node {node}")
            }
        }
    }
}

/// Checks every snapshot invariant. An empty result means the snapshot is valid.
pub fn validate_snapshot(s: &Snapshot) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut parent_of: HashMap<NodeId, Option<NodeId>> = HashMap::new();
    let mut children_of: HashMap<NodeId, &[NodeId]> = HashMap::new();

    for n in &s.nodes {
        if parent_of.insert(n.id, n.parent).is_some() {
            out.push(Violation::DuplicateId { node: n.id });
        }
        children_of.entry(n.id).or_insert(&n.children);
        if n.tag != n.tag.to_ascii_lowercase() {
            out.push(Violation::TagNotLowercase { node: n.id });
        }
        if n.cues.width < 0.0 || n.cues.height < 0.0 {
            out.push(Violation::NegativeSize { node: n.id });
        }
        if n.cues.font_size < 0.0 {
            out.push(Violation::NegativeFontSize { node: n.id });
        }
    }

    let roots: Vec<NodeId> = s.nodes.iter().filter(|n| n.parent.is_none()).map(|n| n.id).collect();
    match roots.len() {
        0 if !s.nodes.is_empty() => out.push(Violation::NoRoot),
        0 => out.push(Violation::NoRoot),
        1 => {}
        _ => out.push(Violation::MultipleRoots { roots }),
    }

    for n in &s.nodes {
        let mut seen = HashSet::new();
        for &c in &n.children {
            if !seen.insert(c) {
                out.push(Violation::DuplicateChild { parent: n.id, child: c });
                continue;
            }
            match parent_of.get(&c) {
                None => out.push(Violation::DanglingChild { parent: n.id, child: c }),
                Some(p) if *p != Some(n.id) => {
                    out.push(Violation::ChildParentMismatch { listed_under: n.id, child: c })
                }
                Some(_) => {}
            }
        }
        if let Some(p) = n.parent {
            match children_of.get(&p) {
                None => out.push(Violation::DanglingParent { node: n.id, parent: p }),
                Some(list) if !list.contains(&n.id) => {
                    out.push(Violation::NotListedByParent { parent: p, child: n.id })
                }
                Some(_) => {}
            }
        }
    }

    out.extend(find_cycles(&parent_of));

    let exists = |id: &NodeId| parent_of.contains_key(id);
    for (i, r) in s.requests.iter().enumerate() {
        if let Some(node) = r.initiator {
            if !exists(&node) {
                out.push(Violation::DanglingInitiator { request: i, node });
            }
        }
    }
    for (i, it) in s.interactions.iter().enumerate() {
        if !exists(&it.target) {
            out.push(Violation::DanglingInteractionTarget { interaction: i, node: it.target });
        }
        if (it.kind == InteractionKind::Type) != it.typed_text.is_some() {
            out.push(Violation::TypedTextMismatch { interaction: i });
        }
    }
    for (i, e) in s.errors.iter().enumerate() {
        if let Some(idx) = e.cause_interaction {
            if idx >= s.interactions.len() {
                out.push(Violation::BadCauseIndex { error: i, index: idx });
            }
        }
    }
    for (i, t) in s.touches.iter().enumerate() {
        if !exists(&t.node) {
            out.push(Violation::DanglingTouch { touch: i, node: t.node });
        }
    }
    if let Some(blocks) = &s.salient_blocks {
        for (b, members) in blocks.iter().enumerate() {
            for &node in members {
                if !exists(&node) {
                    out.push(Violation::DanglingSalientMember { block: b, node });
                }
            }
        }
    }
    out
}

/// Distinct cycles in the parent relation, each reported once.
fn find_cycles(parent_of: &HashMap<NodeId, Option<NodeId>>) -> Vec<Violation> {
    // 0 = unvisited, 1 = on current walk, 2 = finished
    let mut state: HashMap<NodeId, u8> = HashMap::new();
    let mut cycles = Vec::new();
    let mut ids: Vec<NodeId> = parent_of.keys().copied().collect();
    ids.sort();
    for start in ids {
        if state.get(&start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut walk = Vec::new();
        let mut cur = Some(start);
        while let Some(n) = cur {
            match state.get(&n).copied().unwrap_or(0) {
                0 => {
                    state.insert(n, 1);
                    walk.push(n);
                    cur = parent_of.get(&n).copied().flatten();
                }
                1 => {
                    let pos = walk.iter().position(|&w| w == n).unwrap_or(0);
                    let nodes: BTreeSet<NodeId> = walk[pos..].iter().copied().collect();
                    cycles.push(Violation::Cycle { nodes: nodes.into_iter().collect() });
                    break;
                }
                _ => break,
            }
        }
        for n in walk {
            state.insert(n, 2);
        }
    }
    cycles
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::PageBuilder;

    #[test]
    fn valid_snapshot_has_no_violations() {
        let s = PageBuilder::new("https://a.test/").paragraph("hello").build();
        assert_eq!(validate_snapshot(&s), vec![]);
    }

    #[test]
    fn two_parentless_nodes_give_one_violation() {
        let mut s = PageBuilder::new("https://a.test/").paragraph("hello").build();
        let last = s.nodes.len() - 1;
        let leaf = s.nodes[last].id;
        let parent = s.nodes[last].parent.unwrap();
        s.nodes[last].parent = None;
        s.nodes.iter_mut().find(|n| n.id == parent).unwrap().children.retain(|c| *c != leaf);
        let v = validate_snapshot(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(matches!(v[0], Violation::MultipleRoots { .. }));
    }

    #[test]
    fn parent_cycle_is_reported_once() {
        let mut s = PageBuilder::new("https://a.test/").paragraph("a").paragraph("b").build();
        // make body's parent point at one of its own descendants
        let body = s.nodes[1].id;
        let p = s.nodes[2].id;
        s.nodes[1].parent = Some(p);
        s.nodes[2].children.push(body);
        s.nodes[0].children.retain(|c| *c != body);
        let cycles: Vec<_> = validate_snapshot(&s)
            .into_iter()
            .filter(|v| matches!(v, Violation::Cycle { .. }))
            .collect();
        assert_eq!(cycles.len(), 1);
    }

    #[test]
    fn typed_text_only_on_type() {
        let mut s = PageBuilder::new("https://a.test/").paragraph("a").build();
        let target = s.nodes[2].id;
        s.interactions.push(crate::snapshot::Interaction {
            kind: InteractionKind::Click,
            target,
            timestamp: 1.0,
            typed_text: Some("oops".into()),
        });
        assert_eq!(validate_snapshot(&s), vec![Violation::TypedTextMismatch { interaction: 0 }]);
    }
}
