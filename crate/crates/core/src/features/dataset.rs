//! JSON-lines dataset files. The first line is the manifest naming every
//! column with its scope and category; each following line is one row.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::learn::Dataset;
use crate::labeling::{SubtreeLabel, TransitionKind};
use crate::snapshot::NodeId;
use crate::treediff::DeltaKind;

use super::{global_features, subtree_features, FeatureRow, FeatureSpec};

pub const DATASET_FORMAT: &str = "breakwatch-dataset";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u32,
    pub features: Vec<FeatureSpec>,
}

impl Default for DatasetManifest {
    fn default() -> Self {
        DatasetManifest {
            format: DATASET_FORMAT.to_string(),
            version: 1,
            features: subtree_features().iter().chain(global_features()).cloned().collect(),
        }
    }
}

/// Where a row came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMeta {
    pub page_url: String,
    pub transition: TransitionKind,
    pub kind: DeltaKind,
    pub root: NodeId,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetFile {
    pub manifest: DatasetManifest,
    pub rows: Vec<(RowMeta, FeatureRow)>,
}

#[derive(Serialize, Deserialize)]
struct Line {
    #[serde(flatten)]
    meta: RowMeta,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<SubtreeLabel>,
}

impl DatasetFile {
    pub fn feature_names(&self) -> Vec<String> {
        self.manifest.features.iter().map(|f| f.name.clone()).collect()
    }

    /// Labeled rows as a training set with classes `BROKEN`, `LEGITIMATE`,
    /// `NEUTRAL`. Unlabeled rows are skipped.
    pub fn to_training_set(&self) -> Dataset {
        let classes = SubtreeLabel::ALL.iter().map(|l| l.as_str().to_string()).collect();
        let mut d = Dataset::new(self.feature_names(), classes);
        for (_, row) in &self.rows {
            if let Some(l) = row.label {
                let y = SubtreeLabel::ALL.iter().position(|x| *x == l).unwrap();
                d.push(row.values.clone(), y);
            }
        }
        d
    }

    pub fn to_writer(&self, mut w: impl Write) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, &self.manifest)?;
        w.write_all(b"\n")?;
        for (meta, row) in &self.rows {
            let line = Line { meta: meta.clone(), values: row.values.clone(), label: row.label };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn from_reader(r: impl BufRead) -> Result<Self, crate::Error> {
        let mut lines = r.lines();
        let first = match lines.next() {
            Some(l) => l.map_err(|e| crate::Error::io("<dataset>", e))?,
            None => return Err(crate::Error::Format("empty dataset file".into())),
        };
        let manifest: DatasetManifest = serde_json::from_str(&first)?;
        if manifest.format != DATASET_FORMAT {
            return Err(crate::Error::Format(format!("not a dataset file: format `{}`", manifest.format)));
        }
        let mut rows = Vec::new();
        for (i, l) in lines.enumerate() {
            let l = l.map_err(|e| crate::Error::io("<dataset>", e))?;
            if l.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(&l)?;
            if line.values.len() != manifest.features.len() {
                return Err(crate::Error::Format(format!(
                    "row {} has {} values, manifest lists {}",
                    i + 1,
                    line.values.len(),
                    manifest.features.len()
                )));
            }
            rows.push((line.meta, FeatureRow { values: line.values, label: line.label }));
        }
        Ok(DatasetFile { manifest, rows })
    }
}

pub fn write_dataset(path: impl AsRef<Path>, d: &DatasetFile) -> Result<(), crate::Error> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| crate::Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    d.to_writer(&mut w).map_err(|e| crate::Error::io(path, e))?;
    w.flush().map_err(|e| crate::Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<DatasetFile, crate::Error> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| crate::Error::io(path, e))?;
    DatasetFile::from_reader(std::io::BufReader::new(f))
}
