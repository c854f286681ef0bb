//! Segments a page round by round and prints the leaf blocks, showing how
//! each round refines the previous one.
//!
//!     cargo run --example segment_page [-- SNAPSHOT]

use anyhow::Result;
use breakwatch::segmentation::{leaf_blocks, segment_page};
use breakwatch::snapshot::read_snapshot;
use breakwatch::synth::fixture_dir;

fn main() -> Result<()> {
    let path = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| fixture_dir().join("broken_video/none.json"));
    let s = read_snapshot(&path)?;
    for rounds in [1, 2, 3, 6] {
        let h = segment_page(&s, rounds)?;
        println!("round {rounds}: {} leaf blocks", leaf_blocks(&h).len());
    }
    let h = segment_page(&s, 6)?;
    for b in leaf_blocks(&h) {
        let first = s.tree().node(b.members[0]).unwrap();
        println!(
            "  block {:>3} <{}> {} members at ({:.0},{:.0}) {:.0}x{:.0}",
            b.id.0,
            first.tag,
            b.members.len(),
            b.bbox.x,
            b.bbox.y,
            b.bbox.width,
            b.bbox.height
        );
    }
    Ok(())
}
