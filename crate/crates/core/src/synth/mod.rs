//! Deterministic synthetic pages: a snapshot builder, the bundled fixture
//! pages and randomized corpora for training and property tests.

mod builder;
mod bundle;
mod corpus;
mod fixtures;

pub use bundle::{
    bundled_breakage_model, bundled_saliency_model, fixture_dir, fixture_files, snapshot_files, write_fixture_bundle,
    BREAKAGE_MODEL, BUNDLE_SALIENCY_PAGES, BUNDLE_SEED, BUNDLE_TRIPLES, SALIENCY_MODEL,
};
pub use builder::{NodeSpec, PageBuilder, PAGE_WIDTH};
pub use corpus::{
    breakage_corpus, random_tree_pair, random_triple, random_triples, saliency_corpus, TripleTruth,
    SYNTHETIC_SALIENT_CENTRALITY,
};
pub use fixtures::{
    background_split_page, broken_video_triple, hr_page, legit_ad_triple, nested_page, script_errors_pair, site_a,
    svg_origin_page, SiteManifest, Triple, ARTICLE_URL, NESTED_LEAVES, VIDEO_URL,
};
