//! Randomized corpora: visit triples for the breakage classifier, labeled
//! blocks for the saliency classifier, and small random tree pairs for
//! exercising the differ.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::builder::{NodeSpec, PageBuilder, PAGE_WIDTH};
use super::fixtures::Triple;
use crate::features::{extract_triple_rows, DatasetFile, DatasetManifest};
use crate::saliency::{extract_block_features, LabeledBlock};
use crate::segmentation::{leaf_blocks, segment_with, SegmentConfig};
use crate::snapshot::{Attrs, Condition, DomNode, NodeId, Rgb, Snapshot, VisualCues};

const WORDS: &[&str] = &[
    "market", "river", "update", "season", "garden", "review", "council", "school", "recipe", "travel", "league",
    "weather", "museum", "budget", "festival", "science", "harbor", "library", "concert", "bridge",
];

fn sentence<R: Rng + ?Sized>(rng: &mut R, words: usize) -> String {
    let s: Vec<&str> = (0..words).map(|_| *WORDS.choose(rng).unwrap()).collect();
    let mut out = s.join(" ");
    out[..1].make_ascii_uppercase();
    out.push('.');
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Article,
    Video,
    Form,
    Gallery,
    Nav,
    AdFrame,
    AdBanner,
    Tracker,
    Ticker,
    Comments,
}

impl Kind {
    fn salient(self) -> bool {
        matches!(self, Kind::Article | Kind::Video | Kind::Form | Kind::Gallery)
    }

    fn is_ad(self) -> bool {
        matches!(self, Kind::AdFrame | Kind::AdBanner | Kind::Tracker)
    }

    fn height(self, parts: usize) -> f64 {
        match self {
            Kind::Article | Kind::Comments => 50.0 + 60.0 * parts as f64,
            Kind::Video => 420.0,
            Kind::Form => 60.0,
            Kind::Gallery => 220.0,
            Kind::Nav => 50.0,
            Kind::AdFrame => 250.0,
            Kind::AdBanner => 120.0,
            Kind::Tracker => 1.0,
            Kind::Ticker => 40.0,
        }
    }
}

/// How a component renders in one visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Render {
    Full,
    /// Inner content removed, container kept.
    Partial,
    Absent,
}

#[derive(Debug, Clone)]
struct Slot {
    kind: Kind,
    x: f64,
    y: f64,
    w: f64,
    parts: usize,
    texts: Vec<String>,
}

#[derive(Debug, Clone)]
struct PagePlan {
    url: String,
    host: String,
    slots: Vec<Slot>,
    height: f64,
    ticker: [String; 3],
}

fn plan_page(rng: &mut impl Rng, index: usize) -> PagePlan {
    let host = format!("site{index}.example");
    let mut main_kinds = vec![Kind::Nav, Kind::Article];
    let extra = [Kind::Video, Kind::Form, Kind::Gallery, Kind::Article, Kind::Comments, Kind::Ticker, Kind::AdBanner];
    for _ in 0..rng.gen_range(2..5) {
        main_kinds.push(*extra.choose(rng).unwrap());
    }
    main_kinds[1..].shuffle(rng);
    let mut side_kinds = vec![if rng.gen_bool(0.5) { Kind::AdFrame } else { Kind::AdBanner }];
    if rng.gen_bool(0.5) {
        side_kinds.push(*[Kind::AdFrame, Kind::AdBanner, Kind::Comments, Kind::Form].choose(rng).unwrap());
    }
    if rng.gen_bool(0.6) {
        side_kinds.push(Kind::Tracker);
    }

    let mut slots = Vec::new();
    let mut place = |kinds: &[Kind], x: f64, w: f64, rng: &mut dyn rand::RngCore| {
        let mut y = 80.0;
        for &kind in kinds {
            let parts = match kind {
                Kind::Article | Kind::Comments => rng.gen_range(2..5),
                Kind::Gallery => rng.gen_range(3..6),
                Kind::Nav => rng.gen_range(3..6),
                Kind::Form => rng.gen_range(1..3),
                _ => 1,
            };
            let texts = (0..parts.max(2))
                .map(|_| {
                    let n = rng.gen_range(3..9);
                    sentence(rng, n)
                })
                .collect();
            let h = kind.height(parts);
            slots.push(Slot { kind, x, y, w, parts, texts });
            y += h + 20.0;
        }
        y
    };
    let h1 = place(&main_kinds, 20.0, 880.0, rng);
    let h2 = place(&side_kinds, 920.0, 340.0, rng);
    let ticker = [sentence(rng, 4), sentence(rng, 4), sentence(rng, 4)];
    PagePlan { url: format!("https://{host}/page/{index}"), host, slots, height: h1.max(h2) + 20.0, ticker }
}

struct Ctx<'p> {
    plan: &'p PagePlan,
    visit: usize,
}

fn render_slot(b: &mut PageBuilder, ctx: &Ctx<'_>, i: usize, r: Render) {
    if r == Render::Absent {
        return;
    }
    let s = &ctx.plan.slots[i];
    let body = b.body();
    let (x, y, w) = (s.x, s.y, s.w);
    let h = s.kind.height(s.parts);
    let host = &ctx.plan.host;
    let cdn = format!("https://cdn.{host}");
    let ads = format!("https://ads.adnet{}.example", i % 3);
    match s.kind {
        Kind::Article => {
            let root = b.add(body, NodeSpec::new("div", x, y, w, h).class("story"));
            b.add(root, NodeSpec::new("h2", x, y, w, 40.0).text(&s.texts[0]).font(24.0, 700.0));
            if r == Render::Full {
                for k in 0..s.parts {
                    let t = &s.texts[(k + 1) % s.texts.len()];
                    b.add(root, NodeSpec::new("p", x, y + 50.0 + 60.0 * k as f64, w, 50.0).text(t));
                }
            }
            b.salient_subtree(root);
        }
        Kind::Video => {
            let script = format!("{cdn}/player.js");
            let root = b.add(
                body,
                NodeSpec::new("div", x, y, w, h).id(&format!("player-{i}")).class("player").bg(Rgb(0, 0, 0)),
            );
            if r == Render::Full {
                b.request(&script, None, None, 0.2);
                let src = format!("{cdn}/v/{i}.mp4");
                let v = b.add(root, NodeSpec::new("video", x, y, w, h - 50.0).src(&src));
                b.request(&src, Some(v), Some(&script), 0.5);
                b.request(&format!("{cdn}/v/{i}-poster.jpg"), Some(v), Some(&script), 0.5);
                b.touch(&script, v, 0.3);
            }
            let controls = b.add(root, NodeSpec::new("div", x, y + h - 45.0, w, 40.0).class("controls"));
            let play = b.add(controls, NodeSpec::new("button", x + 10.0, y + h - 40.0, 80.0, 30.0).text("Play"));
            b.add(controls, NodeSpec::new("button", x + 100.0, y + h - 40.0, 80.0, 30.0).text("Mute"));
            let c = b.click(play, 3.0 + i as f64);
            if r == Render::Full {
                b.touch(&script, play, 3.05 + i as f64);
                b.request(&format!("{cdn}/v/{i}-001.ts"), None, Some(&script), 3.2 + i as f64);
            } else {
                b.error("TypeError", "player is not initialised", 3.1 + i as f64, Some(c), Some(&format!("https://{host}/app.js")));
            }
            b.salient_subtree(root);
        }
        Kind::Form => {
            let script = format!("https://{host}/form.js");
            let root = b.add(body, NodeSpec::new("form", x, y, w, h).class("search"));
            let mut first = None;
            for k in 0..s.parts {
                let inp = b.add(
                    root,
                    NodeSpec::new("input", x + 10.0 + 210.0 * k as f64, y + 10.0, 200.0, 40.0)
                        .name(&format!("q{k}"))
                        .attr("type", "text"),
                );
                first.get_or_insert(inp);
            }
            b.type_text(first.unwrap(), "query", 2.0 + i as f64);
            if r == Render::Full {
                let go = b.add(root, NodeSpec::new("button", x + w - 110.0, y + 10.0, 100.0, 40.0).text("Go"));
                b.click(go, 2.5 + i as f64);
                b.touch(&script, root, 2.6 + i as f64);
                b.request(&format!("https://{host}/api/search"), None, Some(&script), 2.7 + i as f64);
            }
            b.request(&script, None, None, 0.2);
            b.salient_subtree(root);
        }
        Kind::Gallery => {
            let root = b.add(body, NodeSpec::new("div", x, y, w, h).class("gallery"));
            let shown = if r == Render::Full { s.parts } else { s.parts / 2 };
            for k in 0..shown {
                let src = format!("{cdn}/img/{i}-{k}.jpg");
                let img = b.add(root, NodeSpec::new("img", x + 170.0 * k as f64, y, 160.0, h).src(&src));
                b.request(&src, Some(img), None, 0.4);
            }
            b.salient_subtree(root);
        }
        Kind::Nav => {
            let root = b.add(body, NodeSpec::new("nav", x, y, w, h).class("menu"));
            for k in 0..s.parts {
                b.add(
                    root,
                    NodeSpec::new("a", x + 120.0 * k as f64, y + 10.0, 110.0, 30.0)
                        .text(s.texts[k % s.texts.len()].split(' ').next().unwrap_or("link"))
                        .attr("href", &format!("/s{k}")),
                );
            }
        }
        Kind::AdFrame | Kind::AdBanner => {
            let class = if s.kind == Kind::AdFrame { "ad-wrap" } else { "sponsored" };
            let root = b.add(body, NodeSpec::new("div", x, y, w, h).class(class));
            if r == Render::Full {
                let script = format!("{ads}/tag.js");
                b.request(&script, None, None, 0.2);
                if s.kind == Kind::AdFrame {
                    let src = format!("{ads}/frame?slot={i}");
                    let f = b.add(root, NodeSpec::new("iframe", x, y, w, h).class("ad").src(&src));
                    b.request(&src, Some(f), Some(&script), 0.5);
                    b.request(&format!("{ads}/imp?slot={i}"), Some(f), Some(&script), 0.6);
                    b.touch(&script, f, 0.4);
                } else {
                    let src = format!("{ads}/creative/{i}.png");
                    let img = b.add(root, NodeSpec::new("img", x, y, w, h - 30.0).src(&src));
                    b.add(root, NodeSpec::new("a", x, y + h - 25.0, 120.0, 20.0).text("Sponsored").attr("href", &format!("{ads}/click")));
                    b.request(&src, Some(img), Some(&script), 0.5);
                    b.request(&format!("{ads}/imp?slot={i}"), None, Some(&script), 0.6);
                    b.touch(&script, root, 0.4);
                }
            }
        }
        Kind::Tracker => {
            let src = format!("https://track.adnet{}.example/p.gif", i % 2);
            let px = b.add(body, NodeSpec::new("img", x, y, 1.0, 1.0).src(&src).hidden());
            b.request(&src, Some(px), None, 0.3);
        }
        Kind::Ticker => {
            b.add(body, NodeSpec::new("p", x, y, w, h).class("ticker").text(&ctx.plan.ticker[ctx.visit]));
        }
        Kind::Comments => {
            let root = b.add(body, NodeSpec::new("div", x, y, w, h).class("comments"));
            b.add(root, NodeSpec::new("h3", x, y, w, 40.0).text("Comments").font(18.0, 700.0));
            for k in 0..s.parts {
                b.add(root, NodeSpec::new("p", x, y + 50.0 + 60.0 * k as f64, w, 50.0).class("comment").text(&s.texts[k % s.texts.len()]));
            }
        }
    }
}

fn render(plan: &PagePlan, c: Condition, renders: &[Render], notice: bool) -> Snapshot {
    let visit = match c {
        Condition::None => 0,
        Condition::Breaking => 1,
        Condition::Fixed => 2,
    };
    let mut b = PageBuilder::new(&plan.url).condition(c);
    let body = b.body();
    let header = b.add(body, NodeSpec::new("div", 0.0, 0.0, PAGE_WIDTH, 60.0).class("top").bg(Rgb(30, 30, 60)));
    b.add(header, NodeSpec::new("h1", 20.0, 10.0, 400.0, 40.0).text(&plan.host).font(28.0, 700.0));
    b.request(&plan.url, None, None, 0.0);
    b.request(&format!("https://{}/app.js", plan.host), None, None, 0.1);
    b.touch(&format!("https://{}/app.js", plan.host), header, 0.15);
    let ctx = Ctx { plan, visit };
    for (i, r) in renders.iter().enumerate() {
        render_slot(&mut b, &ctx, i, *r);
    }
    if notice {
        let n = b.add(body, NodeSpec::new("div", 300.0, 20.0, 680.0, 30.0).class("adblock-notice").bg(Rgb(255, 220, 120)));
        b.add(n, NodeSpec::new("p", 300.0, 20.0, 680.0, 30.0).text("Please consider disabling your ad blocker."));
    }
    let f = b.add(body, NodeSpec::new("div", 0.0, plan.height, PAGE_WIDTH, 40.0).class("foot").bg(Rgb(220, 220, 220)));
    b.add(f, NodeSpec::new("p", 20.0, plan.height + 5.0, 400.0, 30.0).text("Footer").font(12.0, 400.0));
    b.build()
}

/// Ground truth of one generated triple.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleTruth {
    /// Whether the breaking list removes part of a salient component.
    pub breaking: bool,
}

/// One random visit triple.
///
/// Ads and trackers are blocked by both lists. With probability
/// `p_break` the breaking list additionally removes all or part of one
/// salient component (article, video, form or gallery), which the fixed
/// list restores. Some pages show an anti-adblock notice under both lists
/// and a ticker whose text changes on every visit.
pub fn random_triple(rng: &mut impl Rng, index: usize, p_break: f64) -> (Triple, TripleTruth) {
    let plan = plan_page(rng, index);
    let none: Vec<Render> = vec![Render::Full; plan.slots.len()];
    let mut fixed = none.clone();
    for (i, s) in plan.slots.iter().enumerate() {
        if s.kind.is_ad() {
            fixed[i] = if s.kind != Kind::Tracker && rng.gen_bool(0.4) { Render::Partial } else { Render::Absent };
        }
    }
    let mut breaking = fixed.clone();
    let salient: Vec<usize> = (0..plan.slots.len()).filter(|&i| plan.slots[i].kind.salient()).collect();
    let broken = !salient.is_empty() && rng.gen_bool(p_break);
    if broken {
        let i = *salient.choose(rng).unwrap();
        breaking[i] = if rng.gen_bool(0.4) { Render::Partial } else { Render::Absent };
    }
    let notice = rng.gen_bool(0.2);
    let t = Triple {
        none: render(&plan, Condition::None, &none, false),
        breaking: render(&plan, Condition::Breaking, &breaking, notice),
        fixed: render(&plan, Condition::Fixed, &fixed, notice),
    };
    (t, TripleTruth { breaking: broken })
}

/// `n` random triples from one seed.
pub fn random_triples(n: usize, seed: u64, p_break: f64) -> Vec<(Triple, TripleTruth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_triple(&mut rng, i, p_break)).collect()
}

/// Labeled breakage dataset from `n` random triples.
pub fn breakage_corpus(n: usize, seed: u64) -> DatasetFile {
    let rows = random_triples(n, seed, 0.5)
        .iter()
        .flat_map(|(t, _)| extract_triple_rows(&t.none, &t.breaking, &t.fixed))
        .collect();
    DatasetFile { manifest: DatasetManifest::default(), rows }
}

/// Normalized-centrality cut used by [`saliency_corpus`].
pub const SYNTHETIC_SALIENT_CENTRALITY: f64 = 0.8;

/// Leaf blocks of random no-list pages, labeled salient iff their
/// centrality exceeds [`SYNTHETIC_SALIENT_CENTRALITY`].
pub fn saliency_corpus(pages: usize, seed: u64) -> Vec<LabeledBlock> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seg = SegmentConfig::default();
    let mut out = Vec::new();
    for i in 0..pages {
        let plan = plan_page(&mut rng, i);
        let s = render(&plan, Condition::None, &vec![Render::Full; plan.slots.len()], false);
        let Ok(h) = segment_with(&s, &seg) else { continue };
        let leaves = leaf_blocks(&h);
        for b in &leaves {
            let features = extract_block_features(&s, b, &leaves);
            let c = features.get("centrality").unwrap_or(0.0);
            out.push(LabeledBlock { features, salient: c > SYNTHETIC_SALIENT_CENTRALITY });
        }
    }
    out
}

const TREE_TAGS: &[&str] = &["div", "p", "span", "a", "li"];
const TREE_TEXTS: &[&str] = &["", "alpha", "alpha beta", "gamma", "delta", "alphabet"];
const TREE_CLASSES: &[&str] = &["x", "y", "z"];

#[derive(Debug, Clone)]
struct GenNode {
    parent: Option<usize>,
    tag: &'static str,
    text: String,
    classes: Vec<String>,
    html_id: Option<String>,
    x: f64,
    y: f64,
    alive: bool,
}

fn gen_node(rng: &mut impl Rng, parent: Option<usize>) -> GenNode {
    let classes = TREE_CLASSES.iter().filter(|_| rng.gen_bool(0.3)).map(|c| c.to_string()).collect();
    GenNode {
        parent,
        tag: TREE_TAGS[rng.gen_range(0..TREE_TAGS.len())],
        text: TREE_TEXTS[rng.gen_range(0..TREE_TEXTS.len())].to_string(),
        classes,
        html_id: if rng.gen_bool(0.1) { Some(format!("n{}", rng.gen_range(0..3))) } else { None },
        x: 10.0 * rng.gen_range(0..8) as f64,
        y: 10.0 * rng.gen_range(0..8) as f64,
        alive: true,
    }
}

fn children_of(nodes: &[GenNode], p: usize) -> Vec<usize> {
    (0..nodes.len()).filter(|&i| nodes[i].alive && nodes[i].parent == Some(p)).collect()
}

fn alive_count(nodes: &[GenNode]) -> usize {
    nodes.iter().filter(|n| n.alive).count()
}

fn grow(rng: &mut impl Rng, nodes: &mut Vec<GenNode>, max_nodes: usize, max_children: usize) {
    let open: Vec<usize> = (0..nodes.len())
        .filter(|&i| nodes[i].alive && children_of(nodes, i).len() < max_children)
        .collect();
    if alive_count(nodes) < max_nodes {
        if let Some(&p) = open.choose(rng) {
            let n = gen_node(rng, Some(p));
            nodes.push(n);
        }
    }
}

fn kill(nodes: &mut [GenNode], i: usize) {
    nodes[i].alive = false;
    for c in 0..nodes.len() {
        if nodes[c].alive && nodes[c].parent == Some(i) {
            kill(nodes, c);
        }
    }
}

fn to_snapshot(nodes: &[GenNode], c: Condition) -> Snapshot {
    // pre-order ids over alive nodes
    let mut order = Vec::new();
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        order.push(i);
        let mut ch = children_of(nodes, i);
        ch.reverse();
        stack.extend(ch);
    }
    let mut id_of = vec![u32::MAX; nodes.len()];
    for (k, &i) in order.iter().enumerate() {
        id_of[i] = k as u32;
    }
    let dom = order
        .iter()
        .map(|&i| {
            let n = &nodes[i];
            DomNode {
                id: NodeId(id_of[i]),
                tag: n.tag.to_string(),
                parent: n.parent.map(|p| NodeId(id_of[p])),
                children: children_of(nodes, i).into_iter().map(|c| NodeId(id_of[c])).collect(),
                attrs: Attrs { html_id: n.html_id.clone(), class_list: n.classes.clone(), ..Attrs::default() },
                cues: VisualCues { x: n.x, y: n.y, width: 10.0, height: 10.0, text: n.text.clone(), ..VisualCues::default() },
            }
        })
        .collect();
    Snapshot {
        page_url: "https://trees.test/".into(),
        condition: c,
        captured_at: chrono::DateTime::parse_from_rfc3339("2024-01-01T00:00:00Z").unwrap(),
        nodes: dom,
        requests: Vec::new(),
        interactions: Vec::new(),
        errors: Vec::new(),
        touches: Vec::new(),
        salient_blocks: None,
    }
}

/// A random tree with at most `max_nodes` nodes and `max_children`
/// children per node, and a mutated copy of it. Attributes come from
/// small pools and positions from a coarse grid, so exact matches,
/// near-matches and score ties are all common.
pub fn random_tree_pair(rng: &mut impl Rng, max_nodes: usize, max_children: usize) -> (Snapshot, Snapshot) {
    assert!(max_nodes >= 1 && max_children >= 1);
    let mut a = vec![gen_node(rng, None)];
    let target = rng.gen_range(1..=max_nodes);
    while alive_count(&a) < target {
        grow(rng, &mut a, max_nodes, max_children);
    }
    let mut b = a.clone();
    for _ in 0..rng.gen_range(0..8) {
        let alive: Vec<usize> = (0..b.len()).filter(|&i| b[i].alive).collect();
        let i = *alive.choose(rng).unwrap();
        match rng.gen_range(0..7) {
            0 if i != 0 => kill(&mut b, i),
            1 => grow(rng, &mut b, max_nodes, max_children),
            2 => b[i].text = TREE_TEXTS[rng.gen_range(0..TREE_TEXTS.len())].to_string(),
            3 => b[i].classes = gen_node(rng, None).classes,
            4 => {
                b[i].x += 10.0 * rng.gen_range(-2..=2) as f64;
                b[i].y += 10.0 * rng.gen_range(-2..=2) as f64;
            }
            5 => b[i].tag = TREE_TAGS[rng.gen_range(0..TREE_TAGS.len())],
            _ => b[i].html_id = gen_node(rng, None).html_id,
        }
    }
    (to_snapshot(&a, Condition::None), to_snapshot(&b, Condition::Breaking))
}
