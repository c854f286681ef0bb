//! Regenerates `fixtures/`: snapshot fixtures, visit triples and the two
//! bundled models. Run after changing fixture pages, the corpus generator
//! or the learners:
//!
//!     cargo run --release --example gen_fixtures [-- OUT_DIR]

use std::path::PathBuf;

use anyhow::Result;
use breakwatch::synth::{fixture_dir, write_fixture_bundle};

fn main() -> Result<()> {
    env_logger::init();
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(fixture_dir);
    let t0 = std::time::Instant::now();
    for p in write_fixture_bundle(&dir)? {
        println!("wrote {}", p.display());
    }
    println!("done in {:.1?}", t0.elapsed());
    Ok(())
}
