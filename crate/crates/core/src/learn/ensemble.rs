use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::tree::{grow_classification_tree, grow_regression_tree, BinnedMatrix, ClassTreeParams, DecisionTree, RegTreeParams};
use super::{preprocess, resample, Dataset, LearnError, PreprocessStats, ResampleStrategy, DEFAULT_SMOTE_K};

pub const MODEL_FORMAT: &str = "breakwatch-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EnsembleKind {
    RandomForest,
    GradientBoosted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, n: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (n as f64).sqrt().round() as usize,
            MaxFeatures::All => n,
            MaxFeatures::Count(c) => c,
        };
        k.clamp(1, n.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Boosting only.
    pub learning_rate: f64,
    /// Forest only.
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    /// Boosting L2 penalty on leaf weights.
    pub lambda: f64,
    /// Boosting: minimum hessian sum per child.
    pub min_child_weight: f64,
}

impl Hyperparams {
    pub fn random_forest() -> Self {
        Hyperparams {
            n_trees: 100,
            max_depth: 12,
            learning_rate: 0.1,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 2,
            lambda: 1.0,
            min_child_weight: 1e-3,
        }
    }

    pub fn gradient_boosted() -> Self {
        Hyperparams { n_trees: 200, max_depth: 4, ..Self::random_forest() }
    }

    pub fn for_kind(kind: EnsembleKind) -> Self {
        match kind {
            EnsembleKind::RandomForest => Self::random_forest(),
            EnsembleKind::GradientBoosted => Self::gradient_boosted(),
        }
    }
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self::gradient_boosted()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleModel {
    pub format: String,
    pub version: u32,
    /// Content hash, filled in by [`TreeEnsembleModel::seal`].
    #[serde(default)]
    pub model_version: String,
    pub kind: EnsembleKind,
    pub hyperparams: Hyperparams,
    /// Input columns the model expects, before preprocessing.
    pub feature_names: Vec<String>,
    pub classes: Vec<String>,
    pub preprocess: PreprocessStats,
    /// Forest: one tree per estimator with class-fraction leaves.
    /// Boosting: `rounds * classes` trees, class-major within a round.
    pub trees: Vec<DecisionTree>,
}

impl TreeEnsembleModel {
    /// Number of boosting rounds or forest trees.
    pub fn rounds(&self) -> usize {
        match self.kind {
            EnsembleKind::RandomForest => self.trees.len(),
            EnsembleKind::GradientBoosted => self.trees.len() / self.classes.len().max(1),
        }
    }

    /// Probabilities on an already preprocessed row.
    pub fn predict_proba_prepared(&self, row: &[f64]) -> Vec<f64> {
        let k = self.classes.len();
        match self.kind {
            EnsembleKind::RandomForest => {
                let mut votes = vec![0.0; k];
                for t in &self.trees {
                    votes[argmax(t.leaf_value(row))] += 1.0;
                }
                let n = self.trees.len().max(1) as f64;
                votes.iter_mut().for_each(|v| *v /= n);
                votes
            }
            EnsembleKind::GradientBoosted => {
                let mut f = vec![0.0; k];
                for (i, t) in self.trees.iter().enumerate() {
                    f[i % k] += t.leaf_value(row)[0];
                }
                softmax(&f)
            }
        }
    }

    /// Probabilities for a raw row in `feature_names` order.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>, LearnError> {
        if row.len() != self.feature_names.len() {
            return Err(LearnError::FeatureMismatch {
                expected: self.feature_names.len(),
                got: row.len(),
            });
        }
        Ok(self.predict_proba_prepared(&self.preprocess.apply(row)))
    }

    pub fn predict(&self, row: &[f64]) -> Result<usize, LearnError> {
        Ok(argmax(&self.predict_proba(row)?))
    }

    /// Fails unless `names` equals the training columns exactly.
    pub fn check_feature_names(&self, names: &[String]) -> Result<(), LearnError> {
        if names != self.feature_names.as_slice() {
            let first = names
                .iter()
                .zip(&self.feature_names)
                .position(|(a, b)| a != b)
                .unwrap_or(names.len().min(self.feature_names.len()));
            return Err(LearnError::FeatureNames { position: first });
        }
        Ok(())
    }

    /// Recomputes `model_version` from the model content.
    pub fn seal(&mut self) {
        self.model_version.clear();
        let body = serde_json::to_vec(self).expect("model serializes");
        let digest = Sha256::digest(&body);
        self.model_version = hex::encode(&digest[..8]);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, crate::Error> {
        let m: TreeEnsembleModel = serde_json::from_str(s)?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(crate::Error::Format(format!("unsupported model {} v{}", m.format, m.version)));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), crate::Error> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| crate::Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, crate::Error> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Self::from_json(&s)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn softmax(f: &[f64]) -> Vec<f64> {
    let m = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = f.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn tree_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Trains on an already preprocessed dataset. The returned model carries
/// identity preprocessing.
pub fn train_ensemble(
    d: &Dataset,
    kind: EnsembleKind,
    params: &Hyperparams,
    seed: u64,
) -> Result<TreeEnsembleModel, LearnError> {
    if params.n_trees == 0 || params.max_depth == 0 {
        return Err(LearnError::DegenerateHyperparams(format!(
            "n_trees = {}, max_depth = {}",
            params.n_trees, params.max_depth
        )));
    }
    if d.class_counts().iter().filter(|c| **c > 0).count() < 2 {
        return Err(LearnError::SingleClass);
    }
    let m = BinnedMatrix::new(&d.x);
    let k = d.classes.len();
    let trees = match kind {
        EnsembleKind::RandomForest => {
            let mtry = params.max_features.resolve(d.n_features());
            let tp = ClassTreeParams { max_depth: params.max_depth, min_samples_split: params.min_samples_split };
            (0..params.n_trees)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, t));
                    let mut idx: Vec<usize> = (0..d.len()).map(|_| rng.gen_range(0..d.len())).collect();
                    let nf = d.n_features();
                    let mut pick = || sample(&mut rng, nf, mtry).into_vec();
                    grow_classification_tree(&m, &d.y, k, &mut idx, &tp, &mut pick)
                })
                .collect()
        }
        EnsembleKind::GradientBoosted => {
            let tp = RegTreeParams {
                max_depth: params.max_depth,
                lambda: params.lambda,
                min_child_weight: params.min_child_weight,
                learning_rate: params.learning_rate,
            };
            let n = d.len();
            let mut f = vec![vec![0.0; k]; n];
            let mut trees = Vec::with_capacity(params.n_trees * k);
            for _ in 0..params.n_trees {
                let p: Vec<Vec<f64>> = f.iter().map(|r| softmax(r)).collect();
                let round: Vec<DecisionTree> = (0..k)
                    .into_par_iter()
                    .map(|c| {
                        let grad: Vec<f64> =
                            (0..n).map(|i| p[i][c] - if d.y[i] == c { 1.0 } else { 0.0 }).collect();
                        let hess: Vec<f64> = (0..n).map(|i| (p[i][c] * (1.0 - p[i][c])).max(1e-16)).collect();
                        let mut idx: Vec<usize> = (0..n).collect();
                        grow_regression_tree(&m, &grad, &hess, &mut idx, &tp)
                    })
                    .collect();
                for (i, row) in d.x.iter().enumerate() {
                    for (c, t) in round.iter().enumerate() {
                        f[i][c] += t.leaf_value(row)[0];
                    }
                }
                trees.extend(round);
            }
            trees
        }
    };
    Ok(TreeEnsembleModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        model_version: String::new(),
        kind,
        hyperparams: *params,
        feature_names: d.feature_names.clone(),
        classes: d.classes.clone(),
        preprocess: PreprocessStats::identity(&d.feature_names),
        trees,
    })
}

/// Full training recipe: preprocess, optionally resample, train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Trainer {
    pub kind: EnsembleKind,
    pub hyperparams: Hyperparams,
    pub resample: Option<ResampleStrategy>,
    pub smote_k: usize,
    pub seed: u64,
}

impl Default for Trainer {
    fn default() -> Self {
        Trainer::new(EnsembleKind::GradientBoosted)
    }
}

impl Trainer {
    pub fn new(kind: EnsembleKind) -> Self {
        Trainer {
            kind,
            hyperparams: Hyperparams::for_kind(kind),
            resample: Some(ResampleStrategy::Smote),
            smote_k: DEFAULT_SMOTE_K,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_resample(mut self, r: Option<ResampleStrategy>) -> Self {
        self.resample = r;
        self
    }

    pub fn with_hyperparams(mut self, h: Hyperparams) -> Self {
        self.hyperparams = h;
        self
    }

    /// Trains a sealed model on raw rows.
    ///
    /// When a class is too small for the configured SMOTE neighborhood,
    /// `k` shrinks to the class size minus one; a class of one row falls
    /// back to random over-sampling.
    pub fn fit(&self, d: &Dataset) -> Result<TreeEnsembleModel, LearnError> {
        let (p, stats) = preprocess(d)?;
        let p = match self.resample {
            None => p,
            Some(ResampleStrategy::Smote) => {
                let counts = p.class_counts();
                let max = counts.iter().copied().max().unwrap_or(0);
                let smallest = counts.iter().copied().filter(|c| *c > 0 && *c < max).min();
                match smallest {
                    None => p,
                    Some(1) => {
                        log::warn!("class with a single row; using random over-sampling");
                        resample(&p, ResampleStrategy::RandomOver, 0, self.seed)?
                    }
                    Some(s) => {
                        let k = self.smote_k.min(s - 1);
                        if k < self.smote_k {
                            log::warn!("smallest class has {s} rows; SMOTE k reduced to {k}");
                        }
                        resample(&p, ResampleStrategy::Smote, k, self.seed)?
                    }
                }
            }
            Some(r) => resample(&p, r, self.smote_k, self.seed)?,
        };
        let mut m = train_ensemble(&p, self.kind, &self.hyperparams, self.seed)?;
        m.feature_names = d.feature_names.clone();
        m.preprocess = stats;
        m.seal();
        Ok(m)
    }
}
