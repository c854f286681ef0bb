//! Diffs the no-list and breaking-list visits of the video fixture and
//! prints the differential subtrees.

use anyhow::Result;
use breakwatch::synth::broken_video_triple;
use breakwatch::treediff::{diff_trees, node_similarity, DeltaKind};

fn main() -> Result<()> {
    let t = broken_video_triple();
    let d = diff_trees(&t.none, &t.breaking);
    println!(
        "{} common pairs, {} added, {} removed, {} edited",
        d.common.len(),
        d.count(DeltaKind::Added),
        d.count(DeltaKind::Removed),
        d.count(DeltaKind::Edited)
    );
    for x in &d.deltas {
        println!("  {} root #{} <{}> with {} members", x.kind.as_str(), x.root.0, x.root_node.tag, x.members.len());
    }

    // similarity of the two page headings, as the matcher sees it
    let h = |s: &breakwatch::snapshot::Snapshot| s.nodes.iter().find(|n| n.tag == "h1").cloned().unwrap();
    let s = node_similarity(&h(&t.none), &h(&t.breaking), d.page_diag);
    println!("h1 vs h1: score {:.3}, exact {}", s.value, s.exact);
    Ok(())
}
