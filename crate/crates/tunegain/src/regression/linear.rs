//! Ordinary least squares on standardized features. A tiny ridge term on
//! the normal equations guards against singular designs (duplicated or
//! constant columns) without noticeably biasing well-posed fits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

const RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Coefficients in standardized feature space.
    coefficients: Vec<f64>,
    /// Mean of the training targets.
    intercept: f64,
    means: Vec<f64>,
    /// Population std per feature; 0 marks a constant column (coefficient 0).
    stds: Vec<f64>,
    feature_names: Vec<String>,
}

pub fn fit_linear(data: &Dataset) -> Result<LinearModel> {
    let n = data.n();
    let d = data.d();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let x = data.rows();
    let y = data.targets();

    let mut means = vec![0.0; d];
    for row in x {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut stds = vec![0.0; d];
    for row in x {
        for j in 0..d {
            let c = row[j] - means[j];
            stds[j] += c * c;
        }
    }
    for s in &mut stds {
        *s = (*s / n as f64).sqrt();
    }

    // standardized design; constant columns become all-zero
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|row| {
            (0..d)
                .map(|j| {
                    if stds[j] == 0.0 {
                        0.0
                    } else {
                        (row[j] - means[j]) / stds[j]
                    }
                })
                .collect()
        })
        .collect();
    let intercept = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - intercept).collect();

    // normal equations Z'Z + ridge*I, Z'y
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for (row, &target) in z.iter().zip(&yc) {
        for j in 0..d {
            b[j] += row[j] * target;
            for k in j..d {
                a[j][k] += row[j] * row[k];
            }
        }
    }
    for j in 0..d {
        for k in 0..j {
            a[j][k] = a[k][j];
        }
        a[j][j] += RIDGE;
    }
    let coefficients = solve(a, b)?;
    Ok(LinearModel {
        coefficients,
        intercept,
        means,
        stds,
        feature_names: data.feature_names().to_vec(),
    })
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let d = b.len();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::SingularSystem);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..d {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..d {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; d];
    for col in (0..d).rev() {
        let mut acc = b[col];
        for k in col + 1..d {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                got: x.len(),
            });
        }
        let mut acc = self.intercept;
        for j in 0..x.len() {
            if self.stds[j] != 0.0 {
                acc += self.coefficients[j] * (x[j] - self.means[j]) / self.stds[j];
            }
        }
        Ok(acc)
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
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

#[cfg(test)]
mod tests {
    use super::*;

    fn one_feature(points: &[(f64, f64)]) -> Dataset {
        Dataset::new(
            vec!["x".into()],
            points.iter().map(|(x, _)| vec![*x]).collect(),
            points.iter().map(|(_, y)| *y).collect(),
        )
        .unwrap()
    }

    #[test]
    fn test_exact_line() {
        // y = 2x + 1
        let data = one_feature(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (4.0, 9.0)]);
        let model = fit_linear(&data).unwrap();
        assert!((model.predict(&[3.0]).unwrap() - 7.0).abs() < 1e-6);
        assert!((model.predict(&[10.0]).unwrap() - 21.0).abs() < 1e-6);
    }

    #[test]
    fn test_slope_recovered_through_standardization() {
        // y = 3x exactly
        let data = one_feature(&[(1.0, 3.0), (2.0, 6.0), (3.0, 9.0), (5.0, 15.0)]);
        let model = fit_linear(&data).unwrap();
        for (x, y) in [(1.0, 3.0), (4.0, 12.0), (0.0, 0.0)] {
            assert!((model.predict(&[x]).unwrap() - y).abs() < 1e-6);
        }
    }

    #[test]
    fn test_constant_target() {
        let data = one_feature(&[(0.0, 5.5), (1.0, 5.5), (2.0, 5.5)]);
        let model = fit_linear(&data).unwrap();
        assert_eq!(model.intercept(), 5.5);
        assert!(model.coefficients()[0].abs() < 1e-6);
        assert!((model.predict(&[77.0]).unwrap() - 5.5).abs() < 1e-6);
    }

    #[test]
    fn test_duplicated_column_stays_finite() {
        let data = Dataset::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0], vec![4.0, 4.0]],
            vec![2.0, 4.0, 6.0, 8.0],
        )
        .unwrap();
        let model = fit_linear(&data).unwrap();
        assert!(model.coefficients().iter().all(|c| c.is_finite()));
        assert!((model.predict(&[2.5, 2.5]).unwrap() - 5.0).abs() < 1e-5);
    }

    #[test]
    fn test_constant_feature_gets_zero_coefficient() {
        let data = Dataset::new(
            vec!["k".into(), "x".into()],
            vec![vec![9.0, 0.0], vec![9.0, 1.0], vec![9.0, 2.0]],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let model = fit_linear(&data).unwrap();
        assert_eq!(model.coefficients()[0], 0.0);
        assert!((model.predict(&[9.0, 1.5]).unwrap() - 2.5).abs() < 1e-6);
    }

    #[test]
    fn test_needs_two_samples() {
        let data = one_feature(&[(1.0, 1.0)]);
        assert!(matches!(
            fit_linear(&data),
            Err(Error::TooFewSamples { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn test_two_features_plane() {
        // y = x0 - 2*x1 + 4
        let rows = [
            (0.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (2.0, 3.0),
            (5.0, 1.0),
            (3.0, 2.0),
        ];
        let data = Dataset::new(
            vec!["x0".into(), "x1".into()],
            rows.iter().map(|(a, b)| vec![*a, *b]).collect(),
            rows.iter().map(|(a, b)| a - 2.0 * b + 4.0).collect(),
        )
        .unwrap();
        let model = fit_linear(&data).unwrap();
        assert!((model.predict(&[10.0, 10.0]).unwrap() - (10.0 - 20.0 + 4.0)).abs() < 1e-5);
    }

    #[test]
    fn test_json_round_trip() {
        let data = one_feature(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        let model = fit_linear(&data).unwrap();
        let back = LinearModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(model, back);
    }
}
