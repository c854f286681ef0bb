use std::collections::HashMap;

use super::{DomNode, NodeId, Snapshot};

/// Indexed read-only view over a snapshot's DOM.
///
/// Assumes a validated snapshot; lookups of unknown ids return `None` and
/// traversals skip dangling children.
#[derive(Debug, Clone)]
pub struct DomTree<'a> {
    snapshot: &'a Snapshot,
    index: HashMap<NodeId, usize>,
    root: Option<NodeId>,
}

impl<'a> DomTree<'a> {
    pub fn new(snapshot: &'a Snapshot) -> Self {
        let index = snapshot
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id, i))
            .collect();
        let root = snapshot.nodes.iter().find(|n| n.parent.is_none()).map(|n| n.id);
        DomTree { snapshot, index, root }
    }

    pub fn snapshot(&self) -> &'a Snapshot {
        self.snapshot
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn root_node(&self) -> Option<&'a DomNode> {
        self.root.and_then(|r| self.node(r))
    }

    pub fn node(&self, id: NodeId) -> Option<&'a DomNode> {
        self.index.get(&id).map(|&i| &self.snapshot.nodes[i])
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.snapshot.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshot.nodes.is_empty()
    }

    pub fn children(&self, id: NodeId) -> impl Iterator<Item = &'a DomNode> + '_ {
        self.node(id)
            .into_iter()
            .flat_map(|n| n.children.iter())
            .filter_map(move |c| self.node(*c))
    }

    /// Pre-order ids of the subtree rooted at `id`, `id` included.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        if !self.contains(id) {
            return out;
        }
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            if let Some(node) = self.node(n) {
                for c in node.children.iter().rev() {
                    if self.contains(*c) {
                        stack.push(*c);
                    }
                }
            }
        }
        out
    }

    /// All node ids in document (pre-)order.
    pub fn document_order(&self) -> Vec<NodeId> {
        self.root.map(|r| self.subtree(r)).unwrap_or_default()
    }

    /// Map from node id to its document-order position.
    pub fn order_index(&self) -> HashMap<NodeId, usize> {
        self.document_order()
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id, i))
            .collect()
    }

    /// Number of ancestors of `id`.
    pub fn depth(&self, id: NodeId) -> usize {
        let mut depth = 0;
        let mut cur = self.node(id).and_then(|n| n.parent);
        while let Some(p) = cur {
            depth += 1;
            if depth > self.len() {
                break;
            }
            cur = self.node(p).and_then(|n| n.parent);
        }
        depth
    }

    pub fn is_ancestor(&self, ancestor: NodeId, of: NodeId) -> bool {
        let mut cur = self.node(of).and_then(|n| n.parent);
        let mut steps = 0;
        while let Some(p) = cur {
            if p == ancestor {
                return true;
            }
            steps += 1;
            if steps > self.len() {
                break;
            }
            cur = self.node(p).and_then(|n| n.parent);
        }
        false
    }
}
