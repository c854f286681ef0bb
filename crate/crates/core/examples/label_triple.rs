//! Labels the deltas of both fixture triples from their visit transitions.

use anyhow::Result;
use breakwatch::labeling::label_visit_triple;
use breakwatch::synth::{broken_video_triple, legit_ad_triple};
use breakwatch::treediff::diff_trees;

fn main() -> Result<()> {
    for (name, t) in [("broken-video", broken_video_triple()), ("legit-ad", legit_ad_triple())] {
        let nf = diff_trees(&t.none, &t.fixed);
        let nb = diff_trees(&t.none, &t.breaking);
        let bf = diff_trees(&t.breaking, &t.fixed);
        println!("{name}:");
        for l in label_visit_triple(&nf, &nb, &bf) {
            println!(
                "  {:<6} {:<7} root #{:<3} <{}> also in N->F: {:<5} => {}",
                l.transition.as_str(),
                l.delta.kind.as_str(),
                l.delta.root.0,
                l.delta.root_node.tag,
                l.also_in_nf,
                l.label.as_str()
            );
        }
    }
    Ok(())
}
