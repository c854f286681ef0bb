//! Run configuration. Loaded from TOML; command-line flags override file
//! values, and the resolved configuration is embedded in every report.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detector::{Comparison, DetectConfig, PageHeuristic};
use crate::learn::{EnsembleKind, ResampleStrategy, Trainer, DEFAULT_SMOTE_K};
use crate::saliency::DEFAULT_SALIENT_THRESHOLD;
use crate::segmentation::SegmentConfig;
use crate::treediff::DiffConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("`{key}` = {value} is outside {range}")]
    OutOfRange { key: &'static str, value: String, range: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gbt,
    Rf,
}

impl From<ModelKind> for EnsembleKind {
    fn from(k: ModelKind) -> Self {
        match k {
            ModelKind::Gbt => EnsembleKind::GradientBoosted,
            ModelKind::Rf => EnsembleKind::RandomForest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Resampling {
    Smote,
    Over,
    Under,
    None,
}

impl From<Resampling> for Option<ResampleStrategy> {
    fn from(r: Resampling) -> Self {
        match r {
            Resampling::Smote => Some(ResampleStrategy::Smote),
            Resampling::Over => Some(ResampleStrategy::RandomOver),
            Resampling::Under => Some(ResampleStrategy::RandomUnder),
            Resampling::None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaliencySection {
    /// Blocks scoring above this probability are salient.
    pub threshold: f64,
    pub max_plans: usize,
}

impl Default for SaliencySection {
    fn default() -> Self {
        SaliencySection { threshold: DEFAULT_SALIENT_THRESHOLD, max_plans: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectSection {
    pub heuristic: PageHeuristic,
    pub comparison: Comparison,
    pub cross_check: bool,
}

impl Default for DetectSection {
    fn default() -> Self {
        DetectSection { heuristic: PageHeuristic::K(1), comparison: Comparison::AtLeast, cross_check: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub kind: ModelKind,
    pub resample: Resampling,
    pub smote_k: usize,
    pub folds: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection { kind: ModelKind::Gbt, resample: Resampling::Smote, smote_k: DEFAULT_SMOTE_K, folds: 5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakage: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saliency: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub segmentation: SegmentConfig,
    pub saliency: SaliencySection,
    pub diff: DiffConfig,
    pub detect: DetectSection,
    pub train: TrainSection,
    pub models: ModelPaths,
}

fn check(key: &'static str, v: f64, lo: f64, hi: f64, range: &'static str) -> Result<(), ConfigError> {
    if v.is_finite() && v >= lo && v <= hi {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange { key, value: v.to_string(), range })
    }
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Config, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let c: Config =
            toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.segmentation;
        check("segmentation.rounds", s.rounds as f64, 1.0, 32.0, "[1, 32]")?;
        for (k, v) in [
            ("segmentation.divider_weight", s.divider_weight),
            ("segmentation.media_weight", s.media_weight),
            ("segmentation.background_weight", s.background_weight),
            ("segmentation.font_weight", s.font_weight),
            ("segmentation.split_threshold", s.split_threshold),
        ] {
            check(k, v, 0.0, 1.0, "[0, 1]")?;
        }
        check("saliency.threshold", self.saliency.threshold, 0.0, 1.0, "[0, 1]")?;
        check("diff.edit_threshold", self.diff.edit_threshold, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
        check("train.folds", self.train.folds as f64, 2.0, 100.0, "[2, 100]")?;
        check("train.smote_k", self.train.smote_k as f64, 1.0, 100.0, "[1, 100]")?;
        Ok(())
    }

    pub fn detect_config(&self) -> DetectConfig {
        DetectConfig {
            heuristic: self.detect.heuristic,
            comparison: self.detect.comparison,
            cross_check: self.detect.cross_check,
            salient_threshold: self.saliency.threshold,
            segment: self.segmentation.clone(),
            diff: self.diff,
        }
    }

    pub fn trainer(&self) -> Trainer {
        let mut t = Trainer::new(self.train.kind.into()).with_resample(self.train.resample.into()).with_seed(self.seed);
        t.smote_k = self.train.smote_k;
        t
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        c.validate().unwrap();
        let back: Config = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file() {
        let c: Config = toml::from_str("seed = 9\n[detect]\nheuristic = \"r10\"\n[segmentation]\nrounds = 3\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.detect.heuristic, PageHeuristic::R(10.0));
        assert_eq!(c.segmentation.rounds, 3);
        assert_eq!(c.diff.edit_threshold, 0.75);
    }

    #[test]
    fn out_of_range() {
        let mut c = Config::default();
        c.diff.edit_threshold = 1.5;
        assert!(matches!(c.validate(), Err(ConfigError::OutOfRange { key: "diff.edit_threshold", .. })));
        assert!(toml::from_str::<Config>("bogus = 1").is_err());
    }
}
