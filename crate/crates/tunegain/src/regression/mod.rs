//! From-scratch regression stack: CART trees, a bootstrap-aggregated random
//! forest with impurity-based feature importance, ordinary least squares,
//! and recursive feature elimination on forest importance.

mod forest;
mod linear;
mod tree;

pub mod rfe;

pub use forest::{fit_forest, FeatureImportance, ForestModel, ForestParams};
pub use linear::{fit_linear, LinearModel};
pub use rfe::{rfe, RfeResult, RfeRound};
pub use tree::Tree;

use crate::error::{Error, Result};
use crate::metrics::FeatureTable;

/// A rectangular regression problem: one row per class, one target each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if feature_names.is_empty() || x.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, n) in feature_names.iter().enumerate() {
            if feature_names[..i].contains(n) {
                return Err(Error::DuplicateFeatureName(n.clone()));
            }
        }
        if y.len() != x.len() {
            return Err(Error::TargetLengthMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        for (row, values) in x.iter().enumerate() {
            if values.len() != feature_names.len() {
                return Err(Error::RaggedDataset {
                    row,
                    expected: feature_names.len(),
                    got: values.len(),
                });
            }
            if let Some(col) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { row, col });
            }
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { row, col: usize::MAX });
        }
        Ok(Dataset {
            feature_names,
            x,
            y,
        })
    }

    /// Rows pulled from a feature table in the order of `targets`.
    pub fn from_feature_table(table: &FeatureTable, targets: &[(String, f64)]) -> Result<Self> {
        let mut x = Vec::with_capacity(targets.len());
        let mut y = Vec::with_capacity(targets.len());
        for (class_id, target) in targets {
            let values = table
                .get(class_id)
                .ok_or_else(|| Error::UnknownClass(class_id.clone()))?;
            x.push(values.to_vec());
            y.push(*target);
        }
        Dataset::new(table.names().to_vec(), x, y)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn d(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    /// Project onto the named columns, in the order given.
    pub fn select_features(&self, keep: &[String]) -> Result<Dataset> {
        let cols: Vec<usize> = keep
            .iter()
            .map(|name| {
                self.feature_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::UnknownFeature(name.clone()))
            })
            .collect::<Result<_>>()?;
        let x = self
            .x
            .iter()
            .map(|row| cols.iter().map(|&c| row[c]).collect())
            .collect();
        Dataset::new(keep.to_vec(), x, self.y.clone())
    }
}

/// Coefficient of determination. A constant target yields 1 for a perfect
/// fit and negative infinity otherwise.
pub fn r_squared(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if predictions.len() != targets.len() {
        return Err(Error::TargetLengthMismatch {
            expected: targets.len(),
            got: predictions.len(),
        });
    }
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let ss_tot: f64 = targets.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (y - p).powi(2))
        .sum();
    if ss_tot == 0.0 {
        return Ok(if ss_res == 0.0 { 1.0 } else { f64::NEG_INFINITY });
    }
    Ok(1.0 - ss_res / ss_tot)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_dataset_validations() {
        assert!(matches!(
            Dataset::new(vec![], vec![], vec![]),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            Dataset::new(vec!["a".into()], vec![vec![1.0]], vec![]),
            Err(Error::TargetLengthMismatch { .. })
        ));
        assert!(matches!(
            Dataset::new(vec!["a".into()], vec![vec![1.0, 2.0]], vec![0.0]),
            Err(Error::RaggedDataset { .. })
        ));
        assert!(matches!(
            Dataset::new(vec!["a".into()], vec![vec![f64::NAN]], vec![0.0]),
            Err(Error::NonFiniteValue { .. })
        ));
        assert!(matches!(
            Dataset::new(vec!["a".into(), "a".into()], vec![vec![1.0, 2.0]], vec![0.0]),
            Err(Error::DuplicateFeatureName(_))
        ));
        assert!(matches!(
            Dataset::new(vec!["a".into()], vec![vec![1.0]], vec![f64::INFINITY]),
            Err(Error::NonFiniteValue { .. })
        ));
    }

    #[test]
    fn test_select_features() {
        let d = Dataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            vec![0.0, 1.0],
        )
        .unwrap();
        let p = d.select_features(&["c".into(), "a".into()]).unwrap();
        assert_eq!(p.feature_names(), &["c".to_string(), "a".to_string()]);
        assert_eq!(p.rows(), &[vec![3.0, 1.0], vec![6.0, 4.0]]);
        assert_eq!(p.targets(), d.targets());
        assert!(matches!(
            d.select_features(&["zz".into()]),
            Err(Error::UnknownFeature(_))
        ));
    }

    #[test]
    fn test_r_squared() {
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        let mean_pred = [2.5; 4];
        assert_eq!(r_squared(&mean_pred, &y).unwrap(), 0.0);
        let anti = [4.0, 3.0, 2.0, 1.0];
        assert!(r_squared(&anti, &y).unwrap() < 0.0);
        assert_eq!(r_squared(&[5.0], &[5.0]).unwrap(), 1.0);
        assert_eq!(r_squared(&[4.0], &[5.0]).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(
            r_squared(&[1.0], &[1.0, 2.0]),
            Err(Error::TargetLengthMismatch { .. })
        ));
    }
}
