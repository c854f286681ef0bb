//! Snapshot data model: one page visit as recorded by the crawler.
//!
//! A snapshot holds the pre-extracted DOM (with per-node visual cues), the
//! network requests, the crawler interactions, JavaScript errors and the
//! script-to-node "touch" log. Snapshots are plain data; [`DomTree`] provides
//! an indexed, read-only view over the node list.

mod graph;
mod tree;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::{build_environment_graph, EdgeKind, EnvEdge, EnvNode, EnvironmentGraph};
pub use tree::DomTree;
pub use validate::{validate_snapshot, Violation};

/// Producer-assigned node identifier. Only meaningful inside one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// The three visit kinds of a triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// No filter list.
    None,
    /// The list version reported as breaking the page.
    Breaking,
    /// The list version that fixed the report.
    Fixed,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::None => "none",
            Condition::Breaking => "breaking",
            Condition::Fixed => "fixed",
        })
    }
}

/// 8-bit RGB triple. Alpha is not recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "[u8; 3]", into = "[u8; 3]")]
pub struct Rgb(pub u8, pub u8, pub u8);

impl From<[u8; 3]> for Rgb {
    fn from(v: [u8; 3]) -> Self {
        Rgb(v[0], v[1], v[2])
    }
}

impl From<Rgb> for [u8; 3] {
    fn from(c: Rgb) -> Self {
        [c.0, c.1, c.2]
    }
}

impl Rgb {
    pub const WHITE: Rgb = Rgb(255, 255, 255);

    /// HSV saturation times value, in `[0, 1]`.
    pub fn vibrancy(self) -> f64 {
        let r = self.0 as f64 / 255.0;
        let g = self.1 as f64 / 255.0;
        let b = self.2 as f64 / 255.0;
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        if max <= 0.0 {
            return 0.0;
        }
        let saturation = (max - min) / max;
        saturation * max
    }
}

/// Rendering cues captured for each node.
///
/// `text` is the node's own text, excluding the text of its descendants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualCues {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "w")]
    pub width: f64,
    #[serde(rename = "h")]
    pub height: f64,
    pub visible: bool,
    #[serde(default)]
    pub text: String,
    #[serde(rename = "bg", default = "white")]
    pub background: Rgb,
    #[serde(default)]
    pub font_size: f64,
    #[serde(default = "normal_weight")]
    pub font_weight: f64,
}

fn white() -> Rgb {
    Rgb::WHITE
}

fn normal_weight() -> f64 {
    400.0
}

impl Default for VisualCues {
    fn default() -> Self {
        VisualCues {
            x: 0.0,
            y: 0.0,
            width: 0.0,
            height: 0.0,
            visible: true,
            text: String::new(),
            background: Rgb::WHITE,
            font_size: 16.0,
            font_weight: 400.0,
        }
    }
}

impl VisualCues {
    pub fn area(&self) -> f64 {
        self.width.max(0.0) * self.height.max(0.0)
    }

    /// Visible and covering a positive screen area.
    pub fn is_rendered(&self) -> bool {
        self.visible && self.area() > 0.0
    }

    pub fn rect(&self) -> Rect {
        Rect {
            x: self.x,
            y: self.y,
            width: self.width.max(0.0),
            height: self.height.max(0.0),
        }
    }
}

/// Axis-aligned screen rectangle in px.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn right(&self) -> f64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    pub fn union(&self, other: &Rect) -> Rect {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        Rect {
            x,
            y,
            width: self.right().max(other.right()) - x,
            height: self.bottom().max(other.bottom()) - y,
        }
    }

    pub fn contains(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    /// Area of the intersection; 0 when disjoint or only touching.
    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = self.right().min(other.right()) - self.x.max(other.x);
        let h = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    /// Bounding box of a set of rectangles, `None` when empty.
    pub fn bounding<'a>(rects: impl IntoIterator<Item = &'a Rect>) -> Option<Rect> {
        rects.into_iter().fold(None, |acc, r| match acc {
            None => Some(*r),
            Some(a) => Some(a.union(r)),
        })
    }
}

/// HTML attributes relevant to matching. Anything else lands in `extra`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Attrs {
    #[serde(rename = "id", default, skip_serializing_if = "Option::is_none")]
    pub html_id: Option<String>,
    #[serde(rename = "class", default, skip_serializing_if = "Vec::is_empty")]
    pub class_list: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, String>,
}

impl Attrs {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.extra.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomNode {
    pub id: NodeId,
    pub tag: String,
    pub parent: Option<NodeId>,
    #[serde(default)]
    pub children: Vec<NodeId>,
    #[serde(default)]
    pub attrs: Attrs,
    pub cues: VisualCues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub url: String,
    /// Element that issued the request, when the crawler could attribute it.
    #[serde(default)]
    pub initiator: Option<NodeId>,
    /// Script that issued the request, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_url: Option<String>,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Click,
    Type,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub kind: InteractionKind,
    pub target: NodeId,
    pub timestamp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub typed_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsError {
    #[serde(rename = "type")]
    pub error_type: String,
    #[serde(default)]
    pub message: String,
    pub timestamp: f64,
    /// Index into the snapshot's interaction list.
    #[serde(default)]
    pub cause_interaction: Option<usize>,
    /// Script that threw, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_url: Option<String>,
}

/// A script queried a DOM node. Inline scripts carry a synthetic URL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptTouch {
    pub script_url: String,
    pub node: NodeId,
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub page_url: String,
    pub condition: Condition,
    pub captured_at: DateTime<FixedOffset>,
    pub nodes: Vec<DomNode>,
    #[serde(default)]
    pub requests: Vec<Request>,
    #[serde(default)]
    pub interactions: Vec<Interaction>,
    #[serde(default)]
    pub errors: Vec<JsError>,
    #[serde(default)]
    pub touches: Vec<ScriptTouch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub salient_blocks: Option<Vec<Vec<NodeId>>>,
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("schema error: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("dangling node reference: {0}")]
    DanglingReference(Violation),
    #[error("invalid snapshot: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Parses and validates a snapshot file.
pub fn parse_snapshot(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    let snapshot: Snapshot = serde_json::from_slice(bytes)?;
    let violations = validate_snapshot(&snapshot);
    if let Some(dangling) = violations.iter().find(|v| v.is_dangling_reference()) {
        return Err(SnapshotError::DanglingReference(dangling.clone()));
    }
    if !violations.is_empty() {
        return Err(SnapshotError::Invalid(violations));
    }
    Ok(snapshot)
}

pub fn serialize_snapshot(s: &Snapshot) -> Vec<u8> {
    serde_json::to_vec_pretty(s).expect("snapshot serialization is infallible")
}

pub fn read_snapshot(path: impl AsRef<std::path::Path>) -> Result<Snapshot, crate::Error> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| crate::Error::io(path, e))?;
    Ok(parse_snapshot(&bytes)?)
}

impl Snapshot {
    pub fn tree(&self) -> DomTree<'_> {
        DomTree::new(self)
    }

    /// Distinct script URLs seen in touches, errors, requests and `<script src>` nodes.
    pub fn scripts(&self) -> std::collections::BTreeSet<&str> {
        let mut out = std::collections::BTreeSet::new();
        out.extend(self.touches.iter().map(|t| t.script_url.as_str()));
        out.extend(self.errors.iter().filter_map(|e| e.script_url.as_deref()));
        out.extend(self.requests.iter().filter_map(|r| r.script_url.as_deref()));
        out.extend(
            self.nodes
                .iter()
                .filter(|n| n.tag == "script")
                .filter_map(|n| n.attrs.src.as_deref()),
        );
        out
    }

    /// Width and height of the rendered page: the root box when it has one,
    /// otherwise the extent of all rendered nodes.
    pub fn page_size(&self) -> (f64, f64) {
        let tree = self.tree();
        if let Some(root) = tree.root_node() {
            if root.cues.width > 0.0 && root.cues.height > 0.0 {
                return (root.cues.width, root.cues.height);
            }
        }
        let (mut w, mut h) = (0.0f64, 0.0f64);
        for n in self.nodes.iter().filter(|n| n.cues.is_rendered()) {
            w = w.max(n.cues.x + n.cues.width);
            h = h.max(n.cues.y + n.cues.height);
        }
        (w, h)
    }
}
