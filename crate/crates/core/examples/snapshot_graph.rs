//! Loads the bundled shop page, validates it and prints its environment
//! graph: which elements issue requests, which scripts touch which nodes,
//! and which interactions raised errors.

use anyhow::Result;
use breakwatch::snapshot::{read_snapshot, validate_snapshot, EdgeKind, EnvironmentGraph};
use breakwatch::synth::{fixture_dir, SiteManifest};

fn main() -> Result<()> {
    let s = read_snapshot(fixture_dir().join("fixture_site_A.cn.snapshot"))?;
    let violations = validate_snapshot(&s);
    println!("{} ({:?}), {} violations", s.page_url, s.condition, violations.len());
    println!("{:?}", SiteManifest::of(&s));

    let g = EnvironmentGraph::build(&s);
    for kind in [EdgeKind::ElementRequest, EdgeKind::ScriptTouch, EdgeKind::InteractionTarget, EdgeKind::InteractionError] {
        println!("{kind:?}: {} edges", g.edge_count(kind));
    }
    for (script, node, t) in g.all_touches() {
        let tag = &s.tree().node(node).map(|n| n.tag.clone()).unwrap_or_default();
        println!("  {script} touched <{tag}> #{} at {t:.1}s", node.0);
    }
    for (i, it) in s.interactions.iter().enumerate() {
        println!("  interaction {i} on #{} caused {} error(s)", it.target.0, g.errors_caused_by(i).len());
    }
    Ok(())
}
