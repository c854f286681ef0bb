use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::{NodeId, Snapshot};

/// A vertex of the environment graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "ref", rename_all = "snake_case")]
pub enum EnvNode {
    Dom(NodeId),
    /// Index into the snapshot's request list.
    Request(usize),
    Script(String),
    /// Index into the interaction list.
    Interaction(usize),
    /// Index into the error list.
    Error(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// element → request it issued
    ElementRequest,
    /// script → node it queried
    ScriptTouch,
    /// target element → interaction
    InteractionTarget,
    /// interaction → error it caused
    InteractionError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnvEdge {
    pub kind: EdgeKind,
    pub from: EnvNode,
    pub to: EnvNode,
}

/// DOM tree augmented with requests, script touches, interactions and errors.
#[derive(Debug, Clone, Default)]
pub struct EnvironmentGraph {
    pub nodes: BTreeSet<EnvNode>,
    pub edges: Vec<EnvEdge>,
    requests_by_element: HashMap<NodeId, Vec<usize>>,
    touches_by_script: BTreeMap<String, Vec<(NodeId, f64)>>,
    scripts_by_node: HashMap<NodeId, BTreeSet<String>>,
    interactions_by_target: HashMap<NodeId, Vec<usize>>,
    errors_by_interaction: HashMap<usize, Vec<usize>>,
}

impl EnvironmentGraph {
    pub fn build(s: &Snapshot) -> Self {
        let mut g = EnvironmentGraph::default();
        g.nodes.extend(s.nodes.iter().map(|n| EnvNode::Dom(n.id)));

        for (i, r) in s.requests.iter().enumerate() {
            g.nodes.insert(EnvNode::Request(i));
            if let Some(el) = r.initiator {
                g.edges.push(EnvEdge {
                    kind: EdgeKind::ElementRequest,
                    from: EnvNode::Dom(el),
                    to: EnvNode::Request(i),
                });
                g.requests_by_element.entry(el).or_default().push(i);
            }
        }
        for t in &s.touches {
            g.nodes.insert(EnvNode::Script(t.script_url.clone()));
            g.edges.push(EnvEdge {
                kind: EdgeKind::ScriptTouch,
                from: EnvNode::Script(t.script_url.clone()),
                to: EnvNode::Dom(t.node),
            });
            g.touches_by_script
                .entry(t.script_url.clone())
                .or_default()
                .push((t.node, t.timestamp));
            g.scripts_by_node
                .entry(t.node)
                .or_default()
                .insert(t.script_url.clone());
        }
        for (i, it) in s.interactions.iter().enumerate() {
            g.nodes.insert(EnvNode::Interaction(i));
            g.edges.push(EnvEdge {
                kind: EdgeKind::InteractionTarget,
                from: EnvNode::Dom(it.target),
                to: EnvNode::Interaction(i),
            });
            g.interactions_by_target.entry(it.target).or_default().push(i);
        }
        for (i, e) in s.errors.iter().enumerate() {
            g.nodes.insert(EnvNode::Error(i));
            if let Some(cause) = e.cause_interaction {
                g.edges.push(EnvEdge {
                    kind: EdgeKind::InteractionError,
                    from: EnvNode::Interaction(cause),
                    to: EnvNode::Error(i),
                });
                g.errors_by_interaction.entry(cause).or_default().push(i);
            }
        }
        g
    }

    pub fn edge_count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    pub fn requests_of(&self, node: NodeId) -> &[usize] {
        self.requests_by_element.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn scripts_touching(&self, node: NodeId) -> impl Iterator<Item = &str> {
        self.scripts_by_node
            .get(&node)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    /// Distinct nodes a script queried.
    pub fn touched_by(&self, script: &str) -> BTreeSet<NodeId> {
        self.touches_by_script
            .get(script)
            .map(|v| v.iter().map(|(n, _)| *n).collect())
            .unwrap_or_default()
    }

    /// `(node, timestamp)` for every touch in the visit.
    pub fn all_touches(&self) -> impl Iterator<Item = (&str, NodeId, f64)> {
        self.touches_by_script
            .iter()
            .flat_map(|(s, v)| v.iter().map(move |(n, t)| (s.as_str(), *n, *t)))
    }

    pub fn interactions_on(&self, node: NodeId) -> &[usize] {
        self.interactions_by_target.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn errors_caused_by(&self, interaction: usize) -> &[usize] {
        self.errors_by_interaction
            .get(&interaction)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

pub fn build_environment_graph(s: &Snapshot) -> EnvironmentGraph {
    EnvironmentGraph::build(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{Interaction, InteractionKind, JsError, Request};
    use crate::synth::PageBuilder;

    #[test]
    fn image_request_gives_one_edge() {
        let mut b = PageBuilder::new("https://a.test/");
        let img = b.image("https://image.com/cat.png", 200.0, 100.0);
        let mut s = b.build();
        s.requests.push(Request {
            url: "https://image.com/cat.png".into(),
            initiator: Some(img),
            script_url: None,
            timestamp: 5.0,
        });
        let g = EnvironmentGraph::build(&s);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(
            g.edges[0],
            EnvEdge { kind: EdgeKind::ElementRequest, from: EnvNode::Dom(img), to: EnvNode::Request(0) }
        );
    }

    #[test]
    fn click_error_chain() {
        let mut b = PageBuilder::new("https://a.test/");
        let button = b.button("Play");
        let mut s = b.build();
        s.interactions.push(Interaction {
            kind: InteractionKind::Click,
            target: button,
            timestamp: 100.0,
            typed_text: None,
        });
        s.errors.push(JsError {
            error_type: "ReferenceError".into(),
            message: "player is not defined".into(),
            timestamp: 101.0,
            cause_interaction: Some(0),
            script_url: None,
        });
        let g = EnvironmentGraph::build(&s);
        let chain: Vec<_> = g.edges.iter().map(|e| (e.from.clone(), e.to.clone())).collect();
        assert_eq!(
            chain,
            vec![
                (EnvNode::Dom(button), EnvNode::Interaction(0)),
                (EnvNode::Interaction(0), EnvNode::Error(0)),
            ]
        );
        assert_eq!(s.errors[g.errors_caused_by(0)[0]].error_type, "ReferenceError");
    }

    #[test]
    fn bare_dom_has_no_augmentation_edges() {
        let s = PageBuilder::new("https://a.test/").paragraph("x").build();
        let g = EnvironmentGraph::build(&s);
        assert!(g.edges.is_empty());
        assert_eq!(g.nodes.len(), s.nodes.len());
    }
}
