//! Bootstrap-aggregated regression forest. Every tree draws its own rng
//! seed from (master seed, tree index) before any parallel work starts, so
//! fitting is bit-identical at any thread count.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Tree, TreeFit};
use super::Dataset;
use crate::error::{Error, Result};
use crate::seeding::{derive_seed, rng_from};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features sampled per node; `None` means ceil(d/3).
    pub max_features: Option<usize>,
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: 5,
            max_features: None,
            min_leaf: 1,
        }
    }
}

impl ForestParams {
    fn resolve_max_features(&self, d: usize) -> usize {
        self.max_features.unwrap_or(d.div_ceil(3))
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidForestParams("n_trees must be >= 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidForestParams("min_leaf must be >= 1".into()));
        }
        if let Some(mf) = self.max_features {
            if mf == 0 || mf > d {
                return Err(Error::InvalidForestParams(format!(
                    "max_features {mf} out of range 1..={d}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    params: ForestParams,
    seed: u64,
    feature_names: Vec<String>,
    trees: Vec<Tree>,
    /// Summed squared-error decrease per feature, over all splits.
    importance_raw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportance {
    /// Normalized to sum 1, or all zero when no tree ever split.
    pub values: Vec<f64>,
    pub degenerate: bool,
}

pub fn fit_forest(data: &Dataset, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    params.validate(data.d())?;
    let n = data.n();
    let d = data.d();
    let max_features = params.resolve_max_features(d);
    let ctx = TreeFit {
        x: data.rows(),
        y: data.targets(),
        d,
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        max_features,
    };

    let tree_seeds: Vec<u64> = (0..params.n_trees)
        .map(|t| derive_seed(seed, "tree", &[t as u64]))
        .collect();
    let fitted: Vec<(Tree, Vec<f64>)> = tree_seeds
        .par_iter()
        .map(|&tree_seed| {
            let mut rng = rng_from(tree_seed);
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut importance = vec![0.0; d];
            let root = ctx.fit(bootstrap, &mut rng, &mut importance);
            (Tree { root }, importance)
        })
        .collect();

    let mut importance_raw = vec![0.0; d];
    let mut trees = Vec::with_capacity(params.n_trees);
    for (tree, imp) in fitted {
        for (total, v) in importance_raw.iter_mut().zip(&imp) {
            *total += v;
        }
        trees.push(tree);
    }
    Ok(ForestModel {
        params: params.clone(),
        seed,
        feature_names: data.feature_names().to_vec(),
        trees,
        importance_raw,
    })
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                got: x.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn feature_importance(&self) -> FeatureImportance {
        let total: f64 = self.importance_raw.iter().sum();
        if total <= 0.0 {
            return FeatureImportance {
                values: vec![0.0; self.importance_raw.len()],
                degenerate: true,
            };
        }
        FeatureImportance {
            values: self.importance_raw.iter().map(|v| v / total).collect(),
            degenerate: false,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(&path, self.to_json()?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::from_json(&text)
    }
}
