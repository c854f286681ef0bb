//! Hand-built fixture pages. Layouts use fixed coordinates, so removing a
//! subtree never shifts its neighbours and each triple differs only where
//! the fixture says it does.

use serde::{Deserialize, Serialize};

use super::builder::{NodeSpec, PageBuilder, PAGE_WIDTH};
use crate::snapshot::{Condition, NodeId, Rgb, Snapshot};

/// The three visits of one page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub none: Snapshot,
    pub breaking: Snapshot,
    pub fixed: Snapshot,
}

impl Triple {
    pub fn visits(&self) -> [&Snapshot; 3] {
        [&self.none, &self.breaking, &self.fixed]
    }
}

/// Crawl times in crawl order: fixed, breaking, none.
fn captured(c: Condition) -> &'static str {
    match c {
        Condition::Fixed => "2024-03-01T12:00:00Z",
        Condition::Breaking => "2024-03-01T12:01:00Z",
        Condition::None => "2024-03-01T12:02:00Z",
    }
}

fn page(url: &str, c: Condition) -> PageBuilder {
    PageBuilder::new(url).condition(c).captured_at(captured(c))
}

const DARK: Rgb = Rgb(24, 26, 48);
const GREY: Rgb = Rgb(230, 230, 230);

fn header(b: &mut PageBuilder, site: &str, links: &[&str]) -> NodeId {
    let body = b.body();
    let h = b.add(body, NodeSpec::new("div", 0.0, 0.0, PAGE_WIDTH, 80.0).class("site-header").bg(DARK));
    b.add(h, NodeSpec::new("h1", 20.0, 20.0, 300.0, 40.0).text(site).font(28.0, 700.0));
    let nav = b.add(h, NodeSpec::new("nav", 400.0, 20.0, 600.0, 40.0));
    for (i, l) in links.iter().enumerate() {
        b.add(
            nav,
            NodeSpec::new("a", 400.0 + 150.0 * i as f64, 20.0, 140.0, 40.0)
                .text(l)
                .attr("href", &format!("/{}", l.to_lowercase())),
        );
    }
    h
}

fn footer(b: &mut PageBuilder, y: f64, text: &str) {
    let body = b.body();
    let f = b.add(body, NodeSpec::new("div", 0.0, y, PAGE_WIDTH, 60.0).class("site-footer").bg(GREY));
    b.add(f, NodeSpec::new("p", 20.0, y + 15.0, 600.0, 30.0).text(text).font(12.0, 400.0));
}

pub const VIDEO_URL: &str = "https://streamhub.example/watch/trail";
const PLAYER_JS: &str = "https://cdn.streamhub.example/js/player.js";
const APP_JS: &str = "https://streamhub.example/static/app.js";

/// Video page. `player` controls whether the player subtree (and the
/// requests it causes) is present.
fn video_page(c: Condition, player: bool) -> Snapshot {
    let mut b = page(VIDEO_URL, c);
    let body = b.body();
    let head = header(&mut b, "StreamHub", &["Home", "Browse", "Live", "About"]);
    let main = b.add(body, NodeSpec::new("div", 0.0, 80.0, PAGE_WIDTH, 1400.0).class("content"));
    let title = b.add(main, NodeSpec::new("h2", 40.0, 100.0, 880.0, 40.0).text("Mountain trail timelapse").font(24.0, 700.0));

    b.request(VIDEO_URL, None, None, 0.0);
    b.request(APP_JS, None, None, 0.1);
    b.request("https://streamhub.example/static/style.css", None, None, 0.1);

    let mut play = None;
    if player {
        b.request(PLAYER_JS, None, None, 0.2);
        let p = b.add(
            main,
            NodeSpec::new("div", 40.0, 160.0, 880.0, 500.0).id("player").class("video-player").bg(Rgb(0, 0, 0)),
        );
        let v = b.add(
            p,
            NodeSpec::new("video", 40.0, 160.0, 880.0, 455.0)
                .class("player-media")
                .src("https://cdn.streamhub.example/v/trail.mp4"),
        );
        let controls = b.add(p, NodeSpec::new("div", 40.0, 620.0, 880.0, 40.0).class("player-controls"));
        let pl = b.add(controls, NodeSpec::new("button", 50.0, 625.0, 80.0, 30.0).class("play").text("Play"));
        let mute = b.add(controls, NodeSpec::new("button", 140.0, 625.0, 80.0, 30.0).class("mute").text("Mute"));
        b.add(
            controls,
            NodeSpec::new("input", 230.0, 630.0, 120.0, 20.0).name("volume").attr("type", "range"),
        );
        b.request("https://cdn.streamhub.example/v/trail.mp4", Some(v), Some(PLAYER_JS), 0.5);
        b.request("https://cdn.streamhub.example/v/trail-poster.jpg", Some(v), Some(PLAYER_JS), 0.5);
        b.request("https://cdn.streamhub.example/v/trail.m3u8", None, Some(PLAYER_JS), 0.6);
        for (n, t) in [(v, 0.3), (pl, 0.3), (mute, 0.3)] {
            b.touch(PLAYER_JS, n, t);
        }
        b.salient_subtree(p);
        play = Some(pl);
    } else {
        // app.js expects the player global
        b.error("TypeError", "window.Player is undefined", 0.4, None, Some(APP_JS));
    }

    let mut desc = Vec::new();
    for (i, t) in [
        "A six hour hike compressed into four minutes.",
        "Filmed on the northern ridge at first light.",
        "Music: Morning Ascent by the Hollow Pines.",
    ]
    .iter()
    .enumerate()
    {
        desc.push(b.add(main, NodeSpec::new("p", 40.0, 700.0 + 60.0 * i as f64, 880.0, 50.0).class("description").text(t)));
    }
    let comments = b.add(main, NodeSpec::new("div", 40.0, 900.0, 880.0, 300.0).class("comments"));
    b.add(comments, NodeSpec::new("h3", 40.0, 900.0, 880.0, 40.0).text("Comments").font(20.0, 700.0));
    for (i, t) in ["Stunning views.", "Which trail is this?"].iter().enumerate() {
        b.add(comments, NodeSpec::new("p", 40.0, 950.0 + 60.0 * i as f64, 880.0, 50.0).class("comment").text(t));
    }
    footer(&mut b, 1480.0, "StreamHub 2024");

    b.touch(APP_JS, head, 0.15);
    b.touch(APP_JS, comments, 0.15);
    if let Some(pl) = play {
        b.click(pl, 3.0);
        b.touch(PLAYER_JS, pl, 3.05);
        b.request("https://cdn.streamhub.example/v/trail-001.ts", None, Some(PLAYER_JS), 3.2);
    }
    let mut text = vec![title];
    text.extend(desc);
    b.salient_block(text);
    b.build()
}

/// The player container is removed under the breaking list only: the
/// breaking list blocks the player script, so the player never renders
/// and its media requests disappear.
pub fn broken_video_triple() -> Triple {
    Triple {
        none: video_page(Condition::None, true),
        breaking: video_page(Condition::Breaking, false),
        fixed: video_page(Condition::Fixed, true),
    }
}

pub const ARTICLE_URL: &str = "https://dailynews.example/article/42";
const AD_JS: &str = "https://ads.adnet.example/tag.js";

fn article_page(c: Condition, ad: bool) -> Snapshot {
    let mut b = page(ARTICLE_URL, c);
    let body = b.body();
    header(&mut b, "Daily News", &["World", "Local", "Sports", "Weather"]);
    let main = b.add(body, NodeSpec::new("div", 0.0, 80.0, 940.0, 1000.0).class("article"));
    let h = b.add(main, NodeSpec::new("h2", 40.0, 100.0, 860.0, 50.0).text("City council approves new park").font(26.0, 700.0));
    let mut text = vec![h];
    for (i, t) in [
        "The council voted seven to two on Tuesday evening.",
        "Construction is expected to begin next spring.",
        "Residents had petitioned for green space since 2019.",
        "The park will include a playground and a pond.",
        "Funding comes from the regional development grant.",
    ]
    .iter()
    .enumerate()
    {
        text.push(b.add(main, NodeSpec::new("p", 40.0, 170.0 + 70.0 * i as f64, 860.0, 60.0).text(t)));
    }
    let side = b.add(body, NodeSpec::new("div", 960.0, 80.0, 300.0, 1000.0).class("sidebar"));
    let slot = b.add(side, NodeSpec::new("div", 960.0, 100.0, 300.0, 250.0).class("ad-slot"));

    b.request(ARTICLE_URL, None, None, 0.0);
    b.request("https://dailynews.example/static/app.js", None, None, 0.1);
    b.request("https://dailynews.example/static/style.css", None, None, 0.1);
    if ad {
        b.request(AD_JS, None, None, 0.2);
        let f = b.add(
            slot,
            NodeSpec::new("iframe", 960.0, 100.0, 300.0, 250.0)
                .class("ad-frame")
                .src("https://ads.adnet.example/frame?slot=top"),
        );
        b.request("https://ads.adnet.example/frame?slot=top", Some(f), Some(AD_JS), 0.5);
        b.request("https://ads.adnet.example/pixel.gif", Some(f), Some(AD_JS), 0.6);
        b.request("https://track.adnet.example/collect", None, Some(AD_JS), 0.7);
        b.touch(AD_JS, slot, 0.3);
        b.touch(AD_JS, f, 0.4);
    }
    let related = b.add(side, NodeSpec::new("div", 960.0, 380.0, 300.0, 300.0).class("related"));
    for (i, t) in ["Budget vote delayed", "New bus routes", "Library reopens"].iter().enumerate() {
        b.add(
            related,
            NodeSpec::new("a", 960.0, 390.0 + 50.0 * i as f64, 300.0, 40.0).text(t).attr("href", "/more"),
        );
    }
    footer(&mut b, 1080.0, "Daily News 2024");
    b.salient_block(text);
    b.build()
}

/// An ad iframe removed by both the breaking and the fixed list.
pub fn legit_ad_triple() -> Triple {
    Triple {
        none: article_page(Condition::None, true),
        breaking: article_page(Condition::Breaking, false),
        fixed: article_page(Condition::Fixed, false),
    }
}

/// Content separated by an `<hr>`.
pub fn hr_page() -> Snapshot {
    let mut b = PageBuilder::new("https://fixtures.test/hr");
    b.add_paragraph("Opening paragraph about the topic.");
    b.add_paragraph("Second paragraph with more detail.");
    b.hr();
    b.add_paragraph("After the divider: related reading.");
    b.add_paragraph("Closing remarks.");
    b.build()
}

/// Two side-by-side `<div>`s with different backgrounds.
pub fn background_split_page() -> Snapshot {
    let mut b = PageBuilder::new("https://fixtures.test/bg");
    let body = b.body();
    let left = b.add(body, NodeSpec::new("div", 0.0, 0.0, 640.0, 400.0).bg(Rgb(250, 240, 200)));
    b.add(left, NodeSpec::new("p", 10.0, 10.0, 600.0, 40.0).text("left column"));
    let right = b.add(body, NodeSpec::new("div", 640.0, 0.0, 640.0, 400.0).bg(Rgb(200, 220, 250)));
    b.add(right, NodeSpec::new("p", 650.0, 10.0, 600.0, 40.0).text("right column"));
    b.build()
}

/// Leaf count of [`nested_page`] at the default number of rounds.
pub const NESTED_LEAVES: usize = 6;

/// Three coloured sections. The first holds two paragraphs split by an
/// `<hr>`, the second an image between two paragraphs, the third a single
/// paragraph.
pub fn nested_page() -> Snapshot {
    let mut b = PageBuilder::new("https://fixtures.test/nested");
    let body = b.body();
    let s1 = b.add(body, NodeSpec::new("div", 0.0, 0.0, PAGE_WIDTH, 300.0).bg(Rgb(255, 255, 255)));
    b.add(s1, NodeSpec::new("p", 0.0, 0.0, PAGE_WIDTH, 100.0).text("first"));
    b.add(s1, NodeSpec::new("hr", 0.0, 140.0, PAGE_WIDTH, 2.0));
    b.add(s1, NodeSpec::new("p", 0.0, 180.0, PAGE_WIDTH, 100.0).text("second"));
    let s2 = b.add(body, NodeSpec::new("div", 0.0, 300.0, PAGE_WIDTH, 500.0).bg(Rgb(240, 240, 250)));
    b.add(s2, NodeSpec::new("p", 0.0, 300.0, PAGE_WIDTH, 80.0).text("third"));
    b.add(s2, NodeSpec::new("img", 0.0, 400.0, 600.0, 300.0).src("https://fixtures.test/i.png"));
    b.add(s2, NodeSpec::new("p", 0.0, 720.0, PAGE_WIDTH, 80.0).text("fourth"));
    let s3 = b.add(body, NodeSpec::new("div", 0.0, 800.0, PAGE_WIDTH, 200.0).bg(Rgb(250, 235, 235)));
    b.add(s3, NodeSpec::new("p", 0.0, 800.0, PAGE_WIDTH, 200.0).text("fifth"));
    b.build()
}

/// Inline `<svg>` icons report their box at (0, 0) in some browsers. The
/// icon's box sits at the page origin although it renders inside a card.
pub fn svg_origin_page(c: Condition, icon_text: &str) -> Snapshot {
    let mut b = PageBuilder::new("https://fixtures.test/svg").condition(c);
    let body = b.body();
    let card = b.add(body, NodeSpec::new("div", 400.0, 600.0, 300.0, 200.0).class("card"));
    b.add(card, NodeSpec::new("svg", 0.0, 0.0, 24.0, 24.0).class("icon").text(icon_text));
    b.add(card, NodeSpec::new("p", 430.0, 610.0, 260.0, 40.0).text("Card body"));
    b.build()
}

/// Two scripts, one of which is removed under the breaking list after
/// throwing two errors in the no-list visit.
pub fn script_errors_pair() -> (Snapshot, Snapshot) {
    const WIDGET: &str = "https://widgets.example/w.js";
    let mut pages = Vec::new();
    for c in [Condition::None, Condition::Breaking] {
        let mut b = PageBuilder::new("https://fixtures.test/errors").condition(c);
        let p = b.add_paragraph("Widget host");
        b.request("https://fixtures.test/main.js", None, None, 0.0);
        b.touch("https://fixtures.test/main.js", p, 0.1);
        if c == Condition::None {
            b.request(WIDGET, None, None, 0.1);
            b.touch(WIDGET, p, 0.2);
            b.error("ReferenceError", "cfg is not defined", 0.3, None, Some(WIDGET));
            b.error("TypeError", "cannot read properties of null", 0.4, None, Some(WIDGET));
        }
        b.error("Error", "unrelated", 0.5, None, Some("https://fixtures.test/main.js"));
        pages.push(b.build());
    }
    let b = pages.pop().unwrap();
    (pages.pop().unwrap(), b)
}

/// Counts recorded for [`site_a`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteManifest {
    pub nodes: usize,
    pub requests: usize,
    pub interactions: usize,
    pub errors: usize,
    pub touches: usize,
}

impl SiteManifest {
    pub fn of(s: &Snapshot) -> Self {
        SiteManifest {
            nodes: s.nodes.len(),
            requests: s.requests.len(),
            interactions: s.interactions.len(),
            errors: s.errors.len(),
            touches: s.touches.len(),
        }
    }
}

/// The small shop page shipped as `fixture_site_A.cn.snapshot`, no-list
/// visit.
pub fn site_a() -> Snapshot {
    let mut b = page("https://shop-a.example/", Condition::None);
    let body = b.body();
    header(&mut b, "Shop A", &["Catalog", "Deals", "Cart"]);
    let search = b.add(body, NodeSpec::new("form", 40.0, 100.0, 600.0, 50.0).class("search"));
    let q = b.add(search, NodeSpec::new("input", 40.0, 105.0, 450.0, 40.0).name("q").attr("type", "text"));
    let go = b.add(search, NodeSpec::new("button", 500.0, 105.0, 100.0, 40.0).text("Search"));
    let grid = b.add(body, NodeSpec::new("div", 40.0, 180.0, 1200.0, 600.0).class("grid"));
    for i in 0..4 {
        let x = 40.0 + 300.0 * i as f64;
        let card = b.add(grid, NodeSpec::new("div", x, 180.0, 280.0, 580.0).class("product"));
        let img = b.add(
            card,
            NodeSpec::new("img", x, 180.0, 280.0, 280.0).src(&format!("https://img.shop-a.example/p{i}.jpg")),
        );
        b.add(card, NodeSpec::new("h3", x, 470.0, 280.0, 30.0).text(&format!("Product {}", i + 1)));
        b.add(card, NodeSpec::new("span", x, 510.0, 100.0, 30.0).class("price").text(&format!("{}.99", 10 + i)));
        b.request(&format!("https://img.shop-a.example/p{i}.jpg"), Some(img), None, 0.3 + 0.01 * i as f64);
    }
    footer(&mut b, 800.0, "Shop A");
    b.request("https://shop-a.example/", None, None, 0.0);
    b.request("https://shop-a.example/js/shop.js", None, None, 0.1);
    b.touch("https://shop-a.example/js/shop.js", search, 0.2);
    b.type_text(q, "lamp", 2.0);
    let c = b.click(go, 2.5);
    b.request("https://shop-a.example/api/search?q=lamp", None, Some("https://shop-a.example/js/shop.js"), 2.6);
    b.error("TypeError", "results is undefined", 2.7, Some(c), Some("https://shop-a.example/js/shop.js"));
    b.build()
}
