//! One line per acceptance criterion, with pinned tolerances. Exits non-zero
//! when any criterion fails.

mod common;

use std::time::Instant;

use breakwatch::detector::{evaluate_baseline, run_pipeline, BaselineRule, DetectConfig, ElementKind};
use breakwatch::learn::{cross_validate, loco_importance, EnsembleKind, TreeEnsembleModel};
use breakwatch::saliency::{centrality, feature_names, saliency_dataset, saliency_trainer};
use breakwatch::synth::{broken_video_triple, legit_ad_triple, saliency_corpus, BREAKAGE_MODEL, SALIENCY_MODEL};
use common::*;

struct Report {
    failed: usize,
    n: usize,
}

impl Report {
    fn line(&mut self, ok: bool, name: &str, detail: String) {
        self.n += 1;
        if !ok {
            self.failed += 1;
        }
        println!("{} [{:02}] {name}: {detail}", if ok { "PASS" } else { "FAIL" }, self.n);
    }
}

fn main() {
    let mut r = Report { failed: 0, n: 0 };

    let run = treediff_oracle(500, 2024);
    r.line(
        run.agree == run.pairs && run.elapsed.as_secs_f64() < 60.0,
        "tree-diff oracle equivalence",
        format!("{}/{} pairs agree in {:.2?} (need 500/500, < 60 s)", run.agree, run.pairs, run.elapsed),
    );

    let v = conservation_sweep(10_000, 77);
    r.line(v == 0, "node conservation", format!("{v} violations over 10000 pairs (need 0)"));

    let (bad, total) = label_table_mismatches();
    r.line(bad == 0 && total == 18, "labeling truth table", format!("{}/{total} cells match (need 18/18)", total - bad));

    let err = auc_oracle_max_error(200, 5);
    r.line(err <= 1e-9, "roc_auc vs pairwise oracle", format!("max |diff| {err:.1e} over 200 instances (need <= 1e-9)"));

    let (bad, synthetic) = smote_violations(100, 9);
    r.line(bad == 0, "SMOTE convexity", format!("{bad} of {synthetic} synthetic rows off-segment over 100 datasets (need 0)"));

    let d = separable_three_class(2000, 1);
    let t = small_trainer(EnsembleKind::GradientBoosted, 40, 3);
    let cv = cross_validate(&d, 5, &t).unwrap();
    let again = cross_validate(&d, 5, &t).unwrap();
    let shuffled = cross_validate(&shuffled_labels(&d, 4), 5, &t).unwrap();
    r.line(
        cv.mean_auc >= 0.95 && (0.4..=0.6).contains(&shuffled.mean_auc) && cv == again,
        "ensemble sanity",
        format!(
            "separable AUC {:.3} (>= 0.95), shuffled AUC {:.3} (in [0.4, 0.6]), deterministic {}",
            cv.mean_auc,
            shuffled.mean_auc,
            cv == again
        ),
    );

    let imp = loco_importance(&loco_dataset(600, 2), &small_trainer(EnsembleKind::GradientBoosted, 30, 1), 5).unwrap();
    let noise = imp.iter().filter(|f| f.feature.starts_with("noise")).map(|f| f.auc_loss.abs()).fold(0.0, f64::max);
    r.line(
        imp[0].feature == "label_copy" && imp[0].auc_loss >= 0.2 && noise <= 0.05,
        "LOCO importance",
        format!("top `{}` loss {:.3} (>= 0.2), max |noise loss| {noise:.3} (<= 0.05)", imp[0].feature, imp[0].auc_loss),
    );

    let dir = fixtures();
    let model = TreeEnsembleModel::load(dir.join(BREAKAGE_MODEL)).unwrap();
    let sal = TreeEnsembleModel::load(dir.join(SALIENCY_MODEL)).unwrap();
    let cfg = DetectConfig::default();
    let video = broken_video_triple();
    let ad = legit_ad_triple();
    let player = video.none.nodes.iter().find(|n| n.attrs.html_id.as_deref() == Some("player")).unwrap().id;
    let t0 = Instant::now();
    let rv = run_pipeline(&video.none, &video.breaking, Some(&video.fixed), Some(&sal), &model, &cfg).unwrap();
    let tv = t0.elapsed();
    let t0 = Instant::now();
    let ra = run_pipeline(&ad.none, &ad.breaking, Some(&ad.fixed), Some(&sal), &model, &cfg).unwrap();
    let ta = t0.elapsed();
    let pipeline_ok = rv.verdict.breaking && rv.verdict.offending_roots == vec![player] && !ra.verdict.breaking;
    r.line(
        pipeline_ok && tv.as_secs_f64() < 5.0 && ta.as_secs_f64() < 5.0,
        "end-to-end fixture discrimination (K1)",
        format!(
            "broken-video breaking={} roots={:?} (want [{}]) in {tv:.2?}; legit-ad breaking={} in {ta:.2?}",
            rv.verdict.breaking, rv.verdict.offending_roots, player.0, ra.verdict.breaking
        ),
    );

    let flags: Vec<(bool, bool)> = [&video, &ad]
        .iter()
        .map(|t| {
            let c = evaluate_baseline(BaselineRule::Count { k: 1.0 }, &[ElementKind::Requests], &t.none, &t.breaking);
            let q = evaluate_baseline(BaselineRule::Ratio { r: 1.0 }, &[ElementKind::Requests], &t.none, &t.breaking);
            (c.breaking, q.breaking)
        })
        .collect();
    let baseline_acc = |pick: fn(&(bool, bool)) -> bool| {
        (usize::from(pick(&flags[0])) + usize::from(!pick(&flags[1]))) as f64 / 2.0
    };
    let pipeline_acc = (usize::from(rv.verdict.breaking) + usize::from(!ra.verdict.breaking)) as f64 / 2.0;
    r.line(
        flags.iter().all(|(c, q)| *c && *q) && pipeline_acc == 1.0,
        "baselines flag both fixtures",
        format!(
            "COUNT-REQ1 {:?}, RATIO-REQ1 {:?}; fixture accuracy COUNT {:.0}% RATIO {:.0}% vs pipeline {:.0}%",
            flags.iter().map(|f| f.0).collect::<Vec<_>>(),
            flags.iter().map(|f| f.1).collect::<Vec<_>>(),
            100.0 * baseline_acc(|f| f.0),
            100.0 * baseline_acc(|f| f.1),
            100.0 * pipeline_acc
        ),
    );

    let names = feature_names().len();
    let c_mid = centrality(0.5, 0.5);
    let c_origin = centrality(0.0, 0.0);
    let scv = cross_validate(&saliency_dataset(&saliency_corpus(60, 3)), 5, &saliency_trainer(3)).unwrap();
    r.line(
        names == 31 && (c_mid - 1.0).abs() < 1e-9 && (c_origin - (-5.0f64).exp()).abs() < 1e-9 && scv.mean_auc >= 0.9,
        "saliency features and classifier",
        format!(
            "{names} features (31), centrality(.5,.5)={c_mid}, centrality(0,0)={c_origin:.9} (e^-5), AUC {:.3} (>= 0.9)",
            scv.mean_auc
        ),
    );

    let snaps = all_fixture_snapshots();
    let v: usize = snaps.iter().map(|(_, s)| refinement_violations(s, 8)).sum();
    r.line(v == 0, "segmentation monotone refinement", format!("{v} violations, rounds 1-8, {} fixtures (need 0)", snaps.len()));

    let ing = ingest_agreement();
    r.line(
        ing.mismatches.is_empty() && ing.urls_total == 30 && ing.manual > 0 && ing.dropped > 0,
        "forum ingest",
        format!(
            "rules {}/{}, urls {}/{} ({} MANUAL, {} DROP){}",
            ing.rules_ok,
            ing.rules_total,
            ing.urls_ok,
            ing.urls_total,
            ing.manual,
            ing.dropped,
            if ing.mismatches.is_empty() { String::new() } else { format!("; {:?}", ing.mismatches) }
        ),
    );

    println!("{} of {} criteria pass", r.n - r.failed, r.n);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
