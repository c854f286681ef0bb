//! Breakage features of differential subtrees and whole pages.
//!
//! Every feature has a fixed name, a scope (one delta or the whole page
//! transition) and a category. Subtree features describe one delta; global
//! features describe the diff it came from. A dataset row is the subtree
//! vector followed by the global vector, in universe order.

mod dataset;
mod extract;
mod tags;

use serde::{Deserialize, Serialize};

pub use dataset::{read_dataset, write_dataset, DatasetFile, DatasetManifest, RowMeta};
pub use extract::{extract_global_features, extract_subtree_features, extract_triple_rows, SalientSets};
pub use tags::{tag_group, TagGroup};

use crate::labeling::SubtreeLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Subtree,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Content,
    Structural,
    Visual,
    Functional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub scope: Scope,
    pub category: Category,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("unknown {scope:?} feature `{name}`")]
    UnknownName { scope: Scope, name: String },
    #[error("{scope:?} feature `{name}` missing or out of order")]
    Missing { scope: Scope, name: String },
    #[error("feature vector has {names} names but {values} values")]
    LengthMismatch { names: usize, values: usize },
}

const GROUP_NAMES: [&str; 4] = ["layout", "text", "io", "other"];

fn subtree_universe() -> Vec<FeatureSpec> {
    use Category::*;
    let mut v = Vec::new();
    let mut push = |name: String, category| {
        v.push(FeatureSpec { name, scope: Scope::Subtree, category });
    };
    for (n, c) in [
        ("size_before", Visual),
        ("size_after", Visual),
        ("size_delta", Visual),
        ("position_shift", Visual),
        ("visible_before", Visual),
        ("visible_after", Visual),
        ("salient_in_before", Visual),
        ("salient_in_after", Visual),
        ("salient_covered_before", Visual),
        ("salient_covered_after", Visual),
        ("salient_removed", Visual),
        ("salient_added", Visual),
        ("salient_edited", Visual),
        ("depth", Structural),
        ("node_count", Structural),
        ("avg_degree", Structural),
        ("children_variance", Structural),
        ("root_depth", Structural),
    ] {
        push(n.to_string(), c);
    }
    for g in GROUP_NAMES {
        for k in ["added", "removed", "edited"] {
            push(format!("{g}_{k}"), Content);
        }
    }
    for (n, c) in [
        ("iframe_added", Content),
        ("iframe_removed", Content),
        ("iframe_total", Content),
        ("text_length_delta", Content),
        ("requests_by_elements_before", Functional),
        ("requests_by_elements_after", Functional),
        ("requests_by_related_scripts_delta", Functional),
        ("related_scripts_touched_delta", Functional),
        ("touched_after_interaction_delta", Functional),
        ("interaction_count", Functional),
        ("errors_after_interaction_delta", Functional),
        ("was_added", Structural),
        ("was_removed", Structural),
        ("was_edited", Structural),
    ] {
        push(n.to_string(), c);
    }
    v
}

fn global_universe() -> Vec<FeatureSpec> {
    use Category::*;
    [
        ("requests_added", Functional),
        ("requests_removed", Functional),
        ("total_requests_before", Functional),
        ("total_requests_after", Functional),
        ("total_scripts_before", Functional),
        ("total_scripts_after", Functional),
        ("total_errors_before", Functional),
        ("total_errors_after", Functional),
        ("errors_by_removed_scripts", Functional),
        ("subtrees_added", Structural),
        ("subtrees_removed", Structural),
        ("subtrees_edited", Structural),
    ]
    .into_iter()
    .map(|(n, c)| FeatureSpec { name: n.to_string(), scope: Scope::Global, category: c })
    .collect()
}

static SUBTREE: once_cell::sync::Lazy<Vec<FeatureSpec>> = once_cell::sync::Lazy::new(subtree_universe);
static GLOBAL: once_cell::sync::Lazy<Vec<FeatureSpec>> = once_cell::sync::Lazy::new(global_universe);

pub fn subtree_features() -> &'static [FeatureSpec] {
    &SUBTREE
}

pub fn global_features() -> &'static [FeatureSpec] {
    &GLOBAL
}

/// Subtree names followed by global names: the column order of a row.
pub fn feature_names() -> Vec<String> {
    SUBTREE.iter().chain(GLOBAL.iter()).map(|f| f.name.clone()).collect()
}

fn universe(scope: Scope) -> &'static [FeatureSpec] {
    match scope {
        Scope::Subtree => &SUBTREE,
        Scope::Global => &GLOBAL,
    }
}

/// Named feature values of one scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub scope: Scope,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

pub type SubtreeFeatureVector = FeatureVector;
pub type GlobalFeatureVector = FeatureVector;

impl FeatureVector {
    /// All-zero vector of the full universe of `scope`.
    pub fn zeros(scope: Scope) -> Self {
        let names: Vec<String> = universe(scope).iter().map(|f| f.name.clone()).collect();
        let values = vec![0.0; names.len()];
        FeatureVector { scope, names, values }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    /// Sets a feature of the universe. Panics on unknown names, which are
    /// programming errors inside the extractors.
    pub(crate) fn set(&mut self, name: &str, value: f64) {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown feature {name}"));
        self.values[i] = value;
    }

    fn check(&self) -> Result<(), FeatureError> {
        if self.names.len() != self.values.len() {
            return Err(FeatureError::LengthMismatch { names: self.names.len(), values: self.values.len() });
        }
        let uni = universe(self.scope);
        for n in &self.names {
            if !uni.iter().any(|f| &f.name == n) {
                return Err(FeatureError::UnknownName { scope: self.scope, name: n.clone() });
            }
        }
        for (i, f) in uni.iter().enumerate() {
            if self.names.get(i) != Some(&f.name) {
                return Err(FeatureError::Missing { scope: self.scope, name: f.name.clone() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<SubtreeLabel>,
}

/// Concatenates a subtree and a global vector into a row, rejecting
/// vectors whose names deviate from the universe.
pub fn assemble_row(
    sub: &SubtreeFeatureVector,
    glob: &GlobalFeatureVector,
    label: Option<SubtreeLabel>,
) -> Result<FeatureRow, FeatureError> {
    if sub.scope != Scope::Subtree {
        return Err(FeatureError::Missing { scope: Scope::Subtree, name: SUBTREE[0].name.clone() });
    }
    if glob.scope != Scope::Global {
        return Err(FeatureError::Missing { scope: Scope::Global, name: GLOBAL[0].name.clone() });
    }
    sub.check()?;
    glob.check()?;
    let mut values = sub.values.clone();
    values.extend_from_slice(&glob.values);
    Ok(FeatureRow { values, label })
}
