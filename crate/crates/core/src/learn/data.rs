use serde::{Deserialize, Serialize};

use super::LearnError;

/// Variance below which a feature counts as constant.
pub const MIN_VARIANCE: f64 = 1e-12;

/// Dense numeric dataset. Missing values are `NaN`; `y` indexes `classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub classes: Vec<String>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, classes: Vec<String>) -> Self {
        Dataset { feature_names, x: Vec::new(), y: Vec::new(), classes }
    }

    pub fn push(&mut self, row: Vec<f64>, class: usize) {
        debug_assert_eq!(row.len(), self.feature_names.len());
        debug_assert!(class < self.classes.len());
        self.x.push(row);
        self.y.push(class);
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.classes.len()];
        for &y in &self.y {
            c[y] += 1;
        }
        c
    }

    /// Rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            classes: self.classes.clone(),
        }
    }

    /// Dataset with column `j` removed.
    pub fn without_feature(&self, j: usize) -> Dataset {
        let mut names = self.feature_names.clone();
        names.remove(j);
        Dataset {
            feature_names: names,
            x: self
                .x
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.remove(j);
                    r
                })
                .collect(),
            y: self.y.clone(),
            classes: self.classes.clone(),
        }
    }
}

/// Frozen preprocessing: impute missing with 0, keep the non-constant
/// columns, standardize with the training mean and population std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub input_names: Vec<String>,
    pub kept: Vec<usize>,
    pub dropped: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl PreprocessStats {
    pub fn identity(names: &[String]) -> Self {
        PreprocessStats {
            input_names: names.to_vec(),
            kept: (0..names.len()).collect(),
            dropped: Vec::new(),
            mean: vec![0.0; names.len()],
            std: vec![1.0; names.len()],
        }
    }

    pub fn output_names(&self) -> Vec<String> {
        self.kept.iter().map(|&j| self.input_names[j].clone()).collect()
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        self.kept
            .iter()
            .enumerate()
            .map(|(o, &j)| {
                let v = row[j];
                let v = if v.is_nan() { 0.0 } else { v };
                (v - self.mean[o]) / self.std[o]
            })
            .collect()
    }
}

pub fn preprocess(d: &Dataset) -> Result<(Dataset, PreprocessStats), LearnError> {
    if d.len() < 2 {
        return Err(LearnError::EmptyDataset { rows: d.len() });
    }
    let n = d.len() as f64;
    let mut stats = PreprocessStats {
        input_names: d.feature_names.clone(),
        kept: Vec::new(),
        dropped: Vec::new(),
        mean: Vec::new(),
        std: Vec::new(),
    };
    for j in 0..d.n_features() {
        let col = d.x.iter().map(|r| if r[j].is_nan() { 0.0 } else { r[j] });
        let mean = col.clone().sum::<f64>() / n;
        let var = col.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if var < MIN_VARIANCE {
            stats.dropped.push(d.feature_names[j].clone());
        } else {
            stats.kept.push(j);
            stats.mean.push(mean);
            stats.std.push(var.sqrt());
        }
    }
    let out = Dataset {
        feature_names: stats.output_names(),
        x: d.x.iter().map(|r| stats.apply(r)).collect(),
        y: d.y.clone(),
        classes: d.classes.clone(),
    };
    Ok((out, stats))
}
