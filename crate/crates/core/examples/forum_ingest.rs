//! Ingests the bundled forum export: broken-page URLs, list versions and
//! rule kinds.
//!
//!     cargo run --example forum_ingest [-- EXPORT.json]

use anyhow::Result;
use breakwatch::ingest::{ingest_record, read_export, UrlExtraction};
use breakwatch::synth::fixture_dir;

fn main() -> Result<()> {
    let path = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| fixture_dir().join("forum/issues.json"));
    let recs = read_export(&path, None)?;
    for rec in &recs {
        let i = ingest_record(rec);
        let url = match &i.url {
            UrlExtraction::Url(u) => u.clone(),
            UrlExtraction::Manual => "MANUAL".into(),
            UrlExtraction::Drop => "DROP".into(),
        };
        let lists = i.lists.map(|l| format!(" lists {} -> {}", l.breaking_ref, l.fixing_ref)).unwrap_or_default();
        println!("{:<6} {:?} {url}{lists}", i.id, i.forum);
        for (rule, kind) in &i.rule_kinds {
            println!("         {rule}  =>  {kind:?}");
        }
    }
    Ok(())
}
