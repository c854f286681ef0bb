//! Preprocessing, resampling, tree ensembles and evaluation.
//!
//! Everything here is generic over a dense [`Dataset`]; the breakage and
//! saliency classifiers are both trained through [`Trainer`].

mod cv;
mod data;
mod ensemble;
mod metrics;
mod resample;
pub mod tree;

pub use cv::{cross_validate, loco_importance, stratified_folds, CvReport, FeatureImportance, FoldMetrics};
pub use data::{preprocess, Dataset, PreprocessStats, MIN_VARIANCE};
pub(crate) use ensemble::argmax;
pub use ensemble::{
    train_ensemble, EnsembleKind, Hyperparams, MaxFeatures, Trainer, TreeEnsembleModel, MODEL_FORMAT, MODEL_VERSION,
};
pub use metrics::{accuracy, mean_std, precision_recall, roc_auc};
pub use resample::{resample, ResampleStrategy, DEFAULT_SMOTE_K};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LearnError {
    #[error("dataset needs at least 2 rows, has {rows}")]
    EmptyDataset { rows: usize },
    #[error("need at least two classes")]
    SingleClass,
    #[error("class `{class}` has {have} rows; SMOTE with k = {k} needs more than k")]
    TooFewMinoritySamples { class: String, have: usize, k: usize },
    #[error("class `{class}` has {have} rows, need {need}")]
    TooFewRows { class: String, have: usize, need: usize },
    #[error("need at least 2 features after preprocessing, have {have}")]
    TooFewFeatures { have: usize },
    #[error("degenerate hyperparameters: {0}")]
    DegenerateHyperparams(String),
    #[error("row has {got} features, model expects {expected}")]
    FeatureMismatch { expected: usize, got: usize },
    #[error("feature names differ from the model's at position {position}")]
    FeatureNames { position: usize },
}
