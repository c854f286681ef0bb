use chrono::{DateTime, FixedOffset};

use crate::snapshot::{
    Attrs, Condition, DomNode, Interaction, InteractionKind, JsError, NodeId, Request, Rgb,
    ScriptTouch, Snapshot, VisualCues,
};

pub const PAGE_WIDTH: f64 = 1280.0;

/// Description of a node to add with [`PageBuilder::add`].
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub tag: String,
    pub attrs: Attrs,
    pub cues: VisualCues,
}

impl NodeSpec {
    pub fn new(tag: &str, x: f64, y: f64, width: f64, height: f64) -> Self {
        NodeSpec {
            tag: tag.to_string(),
            attrs: Attrs::default(),
            cues: VisualCues { x, y, width, height, ..VisualCues::default() },
        }
    }

    pub fn text(mut self, t: &str) -> Self {
        self.cues.text = t.to_string();
        self
    }

    pub fn bg(mut self, c: Rgb) -> Self {
        self.cues.background = c;
        self
    }

    pub fn font(mut self, size: f64, weight: f64) -> Self {
        self.cues.font_size = size;
        self.cues.font_weight = weight;
        self
    }

    pub fn id(mut self, id: &str) -> Self {
        self.attrs.html_id = Some(id.to_string());
        self
    }

    pub fn class(mut self, c: &str) -> Self {
        self.attrs.class_list.push(c.to_string());
        self
    }

    pub fn src(mut self, s: &str) -> Self {
        self.attrs.src = Some(s.to_string());
        self
    }

    pub fn name(mut self, n: &str) -> Self {
        self.attrs.name = Some(n.to_string());
        self
    }

    pub fn attr(mut self, k: &str, v: &str) -> Self {
        self.attrs.extra.insert(k.to_string(), v.to_string());
        self
    }

    pub fn hidden(mut self) -> Self {
        self.cues.visible = false;
        self
    }
}

/// Incremental builder for synthetic snapshots.
///
/// Creates `<html>` and `<body>`; top-level helpers stack content vertically
/// inside the body. Ids are assigned in insertion order.
#[derive(Debug, Clone)]
pub struct PageBuilder {
    page_url: String,
    condition: Condition,
    captured_at: DateTime<FixedOffset>,
    nodes: Vec<DomNode>,
    requests: Vec<Request>,
    interactions: Vec<Interaction>,
    errors: Vec<JsError>,
    touches: Vec<ScriptTouch>,
    salient: Option<Vec<Vec<NodeId>>>,
    cursor_y: f64,
}

impl PageBuilder {
    pub fn new(page_url: &str) -> Self {
        let mut b = PageBuilder {
            page_url: page_url.to_string(),
            condition: Condition::None,
            captured_at: DateTime::parse_from_rfc3339("2024-03-01T12:00:00Z").unwrap(),
            nodes: Vec::new(),
            requests: Vec::new(),
            interactions: Vec::new(),
            errors: Vec::new(),
            touches: Vec::new(),
            salient: None,
            cursor_y: 0.0,
        };
        b.push(None, NodeSpec::new("html", 0.0, 0.0, PAGE_WIDTH, 0.0));
        b.push(Some(NodeId(0)), NodeSpec::new("body", 0.0, 0.0, PAGE_WIDTH, 0.0));
        b
    }

    pub fn condition(mut self, c: Condition) -> Self {
        self.condition = c;
        self
    }

    pub fn captured_at(mut self, rfc3339: &str) -> Self {
        self.captured_at = DateTime::parse_from_rfc3339(rfc3339).expect("valid timestamp");
        self
    }

    pub fn body(&self) -> NodeId {
        NodeId(1)
    }

    pub fn cursor_y(&self) -> f64 {
        self.cursor_y
    }

    fn push(&mut self, parent: Option<NodeId>, spec: NodeSpec) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        if let Some(p) = parent {
            self.nodes[p.0 as usize].children.push(id);
        }
        self.nodes.push(DomNode {
            id,
            tag: spec.tag,
            parent,
            children: Vec::new(),
            attrs: spec.attrs,
            cues: spec.cues,
        });
        id
    }

    /// Adds a node under `parent`.
    pub fn add(&mut self, parent: NodeId, spec: NodeSpec) -> NodeId {
        self.push(Some(parent), spec)
    }

    /// Reserves a full-width band of `height` px below the current content
    /// and returns its top coordinate.
    pub fn reserve(&mut self, height: f64) -> f64 {
        let y = self.cursor_y;
        self.cursor_y += height;
        y
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut DomNode {
        &mut self.nodes[id.0 as usize]
    }

    pub fn node(&self, id: NodeId) -> &DomNode {
        &self.nodes[id.0 as usize]
    }

    pub fn paragraph(mut self, text: &str) -> Self {
        self.add_paragraph(text);
        self
    }

    pub fn add_paragraph(&mut self, text: &str) -> NodeId {
        let y = self.reserve(40.0);
        let body = self.body();
        self.add(body, NodeSpec::new("p", 0.0, y, PAGE_WIDTH, 40.0).text(text))
    }

    pub fn image(&mut self, src: &str, width: f64, height: f64) -> NodeId {
        let y = self.reserve(height);
        let body = self.body();
        self.add(body, NodeSpec::new("img", 0.0, y, width, height).src(src))
    }

    pub fn button(&mut self, label: &str) -> NodeId {
        let y = self.reserve(40.0);
        let body = self.body();
        self.add(body, NodeSpec::new("button", 0.0, y, 120.0, 40.0).text(label))
    }

    pub fn hr(&mut self) -> NodeId {
        let y = self.reserve(2.0);
        let body = self.body();
        self.add(body, NodeSpec::new("hr", 0.0, y, PAGE_WIDTH, 2.0))
    }

    /// Full-width `<div>` band of the given background.
    pub fn section(&mut self, height: f64, bg: Rgb) -> NodeId {
        let y = self.reserve(height);
        let body = self.body();
        self.add(body, NodeSpec::new("div", 0.0, y, PAGE_WIDTH, height).bg(bg))
    }

    pub fn request(&mut self, url: &str, initiator: Option<NodeId>, script: Option<&str>, t: f64) {
        self.requests.push(Request {
            url: url.to_string(),
            initiator,
            script_url: script.map(str::to_string),
            timestamp: t,
        });
    }

    pub fn touch(&mut self, script: &str, node: NodeId, t: f64) {
        self.touches.push(ScriptTouch { script_url: script.to_string(), node, timestamp: t });
    }

    pub fn click(&mut self, target: NodeId, t: f64) -> usize {
        self.interactions.push(Interaction {
            kind: InteractionKind::Click,
            target,
            timestamp: t,
            typed_text: None,
        });
        self.interactions.len() - 1
    }

    pub fn type_text(&mut self, target: NodeId, text: &str, t: f64) -> usize {
        self.interactions.push(Interaction {
            kind: InteractionKind::Type,
            target,
            timestamp: t,
            typed_text: Some(text.to_string()),
        });
        self.interactions.len() - 1
    }

    pub fn error(&mut self, kind: &str, message: &str, t: f64, cause: Option<usize>, script: Option<&str>) {
        self.errors.push(JsError {
            error_type: kind.to_string(),
            message: message.to_string(),
            timestamp: t,
            cause_interaction: cause,
            script_url: script.map(str::to_string),
        });
    }

    pub fn salient_block(&mut self, members: Vec<NodeId>) {
        self.salient.get_or_insert_with(Vec::new).push(members);
    }

    /// Marks the subtree rooted at `root` as one salient block.
    pub fn salient_subtree(&mut self, root: NodeId) {
        let mut members = Vec::new();
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            members.push(n);
            stack.extend(self.nodes[n.0 as usize].children.iter().rev());
        }
        self.salient_block(members);
    }

    pub fn build(mut self) -> Snapshot {
        let height = self
            .nodes
            .iter()
            .map(|n| n.cues.y + n.cues.height)
            .fold(self.cursor_y, f64::max);
        self.nodes[0].cues.height = height;
        self.nodes[1].cues.height = height;
        Snapshot {
            page_url: self.page_url,
            condition: self.condition,
            captured_at: self.captured_at,
            nodes: self.nodes,
            requests: self.requests,
            interactions: self.interactions,
            errors: self.errors,
            touches: self.touches,
            salient_blocks: self.salient,
        }
    }
}
