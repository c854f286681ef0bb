//! Extracts labeled feature rows from the fixture triples and writes them
//! as a dataset file.
//!
//!     cargo run --example feature_rows [-- OUT.jsonl]

use anyhow::Result;
use breakwatch::features::{extract_triple_rows, feature_names, write_dataset, DatasetFile, DatasetManifest};
use breakwatch::synth::{broken_video_triple, legit_ad_triple};

fn main() -> Result<()> {
    let names = feature_names();
    println!("{} features per row", names.len());
    let mut rows = Vec::new();
    for t in [broken_video_triple(), legit_ad_triple()] {
        rows.extend(extract_triple_rows(&t.none, &t.breaking, &t.fixed));
    }
    for (meta, row) in &rows {
        let nonzero = row.values.iter().filter(|v| **v != 0.0).count();
        println!(
            "  {} {} #{} label {:?}, {nonzero} nonzero features",
            meta.transition.as_str(),
            meta.kind.as_str(),
            meta.root.0,
            row.label.map(|l| l.as_str())
        );
    }
    if let Some(out) = std::env::args().nth(1) {
        write_dataset(&out, &DatasetFile { manifest: DatasetManifest::default(), rows })?;
        println!("wrote {out}");
    }
    Ok(())
}
