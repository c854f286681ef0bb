//! Runs the detection pipeline with the bundled models on both fixture
//! triples and compares it with the request-count baselines.

use anyhow::Result;
use breakwatch::detector::{evaluate_baseline, run_pipeline, BaselineRule, DetectConfig, ElementKind, PageHeuristic};
use breakwatch::learn::TreeEnsembleModel;
use breakwatch::synth::{broken_video_triple, fixture_dir, legit_ad_triple, BREAKAGE_MODEL, SALIENCY_MODEL};

fn main() -> Result<()> {
    let model = TreeEnsembleModel::load(fixture_dir().join(BREAKAGE_MODEL))?;
    let sal = TreeEnsembleModel::load(fixture_dir().join(SALIENCY_MODEL))?;
    for t in [broken_video_triple(), legit_ad_triple()] {
        for heuristic in [PageHeuristic::K(1), PageHeuristic::R(10.0)] {
            let cfg = DetectConfig { heuristic, ..DetectConfig::default() };
            let r = run_pipeline(&t.none, &t.breaking, Some(&t.fixed), Some(&sal), &model, &cfg)?;
            if heuristic == PageHeuristic::K(1) {
                print!("{}", r.to_text());
            } else {
                println!("{}: breaking = {}", r.verdict.heuristic_used, r.verdict.breaking);
            }
        }
        for rule in [BaselineRule::Count { k: 1.0 }, BaselineRule::Ratio { r: 1.0 }] {
            let v = evaluate_baseline(rule, &[ElementKind::Requests], &t.none, &t.breaking);
            println!("{}: breaking = {}", v.heuristic_used, v.breaking);
        }
        println!();
    }
    Ok(())
}
