//! Cross-validates both ensembles on a synthetic breakage corpus, with and
//! without resampling, and prints the most important features by LOCO.

use anyhow::Result;
use breakwatch::learn::{cross_validate, loco_importance, EnsembleKind, ResampleStrategy, Trainer};
use breakwatch::synth::breakage_corpus;

fn main() -> Result<()> {
    let d = breakage_corpus(120, 3).to_training_set();
    println!("{} rows, classes {:?} {:?}", d.len(), d.classes, d.class_counts());
    for kind in [EnsembleKind::GradientBoosted, EnsembleKind::RandomForest] {
        for resample in [None, Some(ResampleStrategy::Smote), Some(ResampleStrategy::RandomUnder)] {
            let t = Trainer::new(kind).with_resample(resample).with_seed(3);
            let cv = cross_validate(&d, 5, &t)?;
            println!(
                "{kind:?} {resample:?}: AUC {:.3} ± {:.3}, accuracy {:.3}",
                cv.mean_auc, cv.std_auc, cv.mean_accuracy
            );
        }
    }
    let mut t = Trainer::new(EnsembleKind::GradientBoosted).with_seed(3);
    t.hyperparams.n_trees = 50;
    for f in loco_importance(&d, &t, 5)?.iter().take(8) {
        println!("  {:<40} {:+.4}", f.feature, f.auc_loss);
    }
    Ok(())
}
