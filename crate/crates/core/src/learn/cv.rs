use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, mean_std, precision_recall, roc_auc};
use super::{argmax, preprocess, Dataset, LearnError, Trainer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    /// One-vs-rest AUC of class 0.
    pub auc: f64,
    /// One-vs-rest AUC per class; `None` when the class is absent from the
    /// validation fold or fills it entirely.
    pub class_auc: Vec<Option<f64>>,
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub classes: Vec<String>,
    pub folds: Vec<FoldMetrics>,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Validation indices of each fold. Rows of each class are shuffled and
/// dealt round-robin, so every fold gets `floor` or `ceil` of its share.
pub fn stratified_folds(y: &[usize], n_classes: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for c in 0..n_classes {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Stratified k-fold cross-validation. Resampling (part of the trainer)
/// only ever sees the training part of a fold.
pub fn cross_validate(d: &Dataset, k: usize, trainer: &Trainer) -> Result<CvReport, LearnError> {
    if k < 2 {
        return Err(LearnError::TooFewRows { class: String::new(), have: d.len(), need: 2 });
    }
    for (c, n) in d.class_counts().into_iter().enumerate() {
        if n > 0 && n < k {
            return Err(LearnError::TooFewRows { class: d.classes[c].clone(), have: n, need: k });
        }
    }
    let folds = stratified_folds(&d.y, d.classes.len(), k, trainer.seed);
    let results: Vec<Result<FoldMetrics, LearnError>> = folds
        .par_iter()
        .map(|val| {
            let mut in_val = vec![false; d.len()];
            val.iter().for_each(|&i| in_val[i] = true);
            let train: Vec<usize> = (0..d.len()).filter(|&i| !in_val[i]).collect();
            let model = trainer.fit(&d.subset(&train))?;
            let probs: Vec<Vec<f64>> = val.iter().map(|&i| model.predict_proba(&d.x[i])).collect::<Result<_, _>>()?;
            let truth: Vec<usize> = val.iter().map(|&i| d.y[i]).collect();
            let pred: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
            let class_auc: Vec<Option<f64>> = (0..d.classes.len())
                .map(|c| {
                    let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
                    let labels: Vec<bool> = truth.iter().map(|t| *t == c).collect();
                    roc_auc(&scores, &labels).ok()
                })
                .collect();
            let (precision, recall) = (0..d.classes.len()).map(|c| precision_recall(&pred, &truth, c)).unzip();
            Ok(FoldMetrics {
                auc: class_auc[0].ok_or(LearnError::SingleClass)?,
                class_auc,
                accuracy: accuracy(&pred, &truth),
                precision,
                recall,
            })
        })
        .collect();
    let folds: Vec<FoldMetrics> = results.into_iter().collect::<Result<_, _>>()?;
    let (mean_auc, std_auc) = mean_std(&folds.iter().map(|f| f.auc).collect::<Vec<_>>());
    let (mean_accuracy, std_accuracy) = mean_std(&folds.iter().map(|f| f.accuracy).collect::<Vec<_>>());
    Ok(CvReport { classes: d.classes.clone(), folds, mean_auc, std_auc, mean_accuracy, std_accuracy })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub auc_loss: f64,
}

/// Leave-one-covariate-out importance: cross-validated AUC with all
/// features minus the AUC without each one, sorted by loss descending.
pub fn loco_importance(d: &Dataset, trainer: &Trainer, folds: usize) -> Result<Vec<FeatureImportance>, LearnError> {
    let (p, _) = preprocess(d)?;
    if p.n_features() < 2 {
        return Err(LearnError::TooFewFeatures { have: p.n_features() });
    }
    let base = cross_validate(d, folds, trainer)?.mean_auc;
    let losses: Vec<Result<FeatureImportance, LearnError>> = (0..d.n_features())
        .into_par_iter()
        .map(|j| {
            let auc = cross_validate(&d.without_feature(j), folds, trainer)?.mean_auc;
            Ok(FeatureImportance { feature: d.feature_names[j].clone(), auc_loss: base - auc })
        })
        .collect();
    let mut out: Vec<FeatureImportance> = losses.into_iter().collect::<Result<_, _>>()?;
    out.sort_by(|a, b| b.auc_loss.total_cmp(&a.auc_loss).then_with(|| a.feature.cmp(&b.feature)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_folds_of_two() {
        let folds = stratified_folds(&[0, 0, 1, 1], 2, 2, 7);
        assert_eq!(folds.len(), 2);
        assert!(folds.iter().all(|f| f.len() == 2));
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
    }

    #[test]
    fn too_few_rows_per_class() {
        let mut d = Dataset::new(vec!["a".into()], vec!["x".into(), "y".into()]);
        for i in 0..10 {
            d.push(vec![i as f64], (i < 2) as usize);
        }
        let r = cross_validate(&d, 5, &Trainer::default());
        assert!(matches!(r, Err(LearnError::TooFewRows { have: 2, need: 5, .. })));
    }
}
