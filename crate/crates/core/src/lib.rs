//! Breakage detection for content-blocker filter-list changes.
//!
//! The crate diffs DOM snapshots from three visits of one page (no list,
//! breaking list, fixed list), labels and classifies the changed subtrees,
//! and turns subtree predictions into a page-level verdict that names the
//! offending subtrees.
//!
//! Module map:
//!
//! * [`snapshot`]: snapshot data model, validation, environment graph
//! * [`segmentation`]: VIPS-style block hierarchy
//! * [`saliency`]: block features, saliency classifier, interaction planning
//! * [`treediff`]: node similarity and differential subtrees
//! * [`labeling`]: ground-truth labels from visit transitions
//! * [`features`]: subtree and global breakage features
//! * [`learn`]: preprocessing, resampling, tree ensembles, metrics
//! * [`detector`]: page heuristics, baselines, the end-to-end pipeline
//! * [`ingest`]: forum issue exports and filter-rule kinds
//! * [`synth`]: deterministic synthetic pages and bundled fixtures
//! * [`config`]: TOML run configuration
//! * [`cli`]: the `breakwatch` command line

pub mod cli;
pub mod config;
pub mod detector;
pub mod ingest;
pub mod features;
pub mod labeling;
pub mod learn;
pub mod saliency;
pub mod segmentation;
pub mod snapshot;
pub mod synth;
pub mod treediff;

mod error;

pub use error::Error;
