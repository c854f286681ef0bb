//! The files under `fixtures/`: snapshots, triples and the two bundled
//! models. Everything is regenerated from code, so the bundle can be
//! checked for staleness byte by byte.

use std::path::{Path, PathBuf};

use super::corpus::{breakage_corpus, saliency_corpus};
use super::fixtures::{
    background_split_page, broken_video_triple, hr_page, legit_ad_triple, nested_page, script_errors_pair, site_a,
    svg_origin_page, SiteManifest, Triple,
};
use crate::detector::breakage_trainer;
use crate::learn::TreeEnsembleModel;
use crate::saliency::train_saliency_model;
use crate::snapshot::{serialize_snapshot, Condition, Snapshot};

/// Seed for the bundled corpora and models.
pub const BUNDLE_SEED: u64 = 11;
/// Random triples behind the bundled breakage model.
pub const BUNDLE_TRIPLES: usize = 300;
/// Random pages behind the bundled saliency model.
pub const BUNDLE_SALIENCY_PAGES: usize = 120;

pub const BREAKAGE_MODEL: &str = "models/breakage.json";
pub const SALIENCY_MODEL: &str = "models/saliency.json";

/// Directory of the bundled fixtures in this source tree.
pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn bundled_breakage_model() -> TreeEnsembleModel {
    let d = breakage_corpus(BUNDLE_TRIPLES, BUNDLE_SEED).to_training_set();
    breakage_trainer(BUNDLE_SEED).fit(&d).expect("synthetic corpus trains")
}

pub fn bundled_saliency_model() -> TreeEnsembleModel {
    train_saliency_model(&saliency_corpus(BUNDLE_SALIENCY_PAGES, BUNDLE_SEED), BUNDLE_SEED)
        .expect("synthetic corpus trains")
}

fn snap(out: &mut Vec<(PathBuf, Vec<u8>)>, path: &str, s: &Snapshot) {
    out.push((PathBuf::from(path), serialize_snapshot(s)));
}

fn triple(out: &mut Vec<(PathBuf, Vec<u8>)>, dir: &str, t: &Triple) {
    snap(out, &format!("{dir}/none.json"), &t.none);
    snap(out, &format!("{dir}/breaking.json"), &t.breaking);
    snap(out, &format!("{dir}/fixed.json"), &t.fixed);
}

/// Snapshot fixtures as (relative path, bytes), without the models.
pub fn snapshot_files() -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    triple(&mut out, "broken_video", &broken_video_triple());
    triple(&mut out, "legit_ad", &legit_ad_triple());
    let site = site_a();
    snap(&mut out, "fixture_site_A.cn.snapshot", &site);
    let mut manifest = serde_json::to_string_pretty(&SiteManifest::of(&site)).expect("serializable");
    manifest.push('\n');
    out.push((PathBuf::from("fixture_site_A.manifest.json"), manifest.into_bytes()));
    snap(&mut out, "pages/hr.json", &hr_page());
    snap(&mut out, "pages/background_split.json", &background_split_page());
    snap(&mut out, "pages/nested.json", &nested_page());
    snap(&mut out, "pages/svg_origin_none.json", &svg_origin_page(Condition::None, "Menu"));
    let (a, b) = script_errors_pair();
    snap(&mut out, "pages/script_errors_none.json", &a);
    snap(&mut out, "pages/script_errors_breaking.json", &b);
    out
}

/// Every generated fixture file, models included.
pub fn fixture_files() -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = snapshot_files();
    out.push((PathBuf::from(BREAKAGE_MODEL), bundled_breakage_model().to_json().into_bytes()));
    out.push((PathBuf::from(SALIENCY_MODEL), bundled_saliency_model().to_json().into_bytes()));
    out
}

/// Writes [`fixture_files`] under `dir`.
pub fn write_fixture_bundle(dir: &Path) -> Result<Vec<PathBuf>, crate::Error> {
    let mut written = Vec::new();
    for (rel, bytes) in fixture_files() {
        let p = dir.join(&rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| crate::Error::io(parent, e))?;
        }
        std::fs::write(&p, bytes).map_err(|e| crate::Error::io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}
