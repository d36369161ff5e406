//! Recursive feature elimination: refit a forest, drop the lowest-importance
//! features, repeat until the target count survives. Importance ties drop
//! the lexicographically last name first, keeping rounds deterministic.

use super::forest::{fit_forest, ForestParams};
use super::Dataset;
use crate::error::{Error, Result};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct RfeRound {
    pub round: usize,
    /// Names removed this round, in removal order.
    pub dropped: Vec<String>,
    /// (name, importance) for every feature alive at the start of the round.
    pub importances: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeResult {
    /// Survivors in the original dataset's feature order.
    pub selected: Vec<String>,
    pub trace: Vec<RfeRound>,
}

pub fn rfe(
    data: &Dataset,
    target_k: usize,
    params: &ForestParams,
    seed: u64,
    step: usize,
) -> Result<RfeResult> {
    if target_k == 0 || target_k > data.d() {
        return Err(Error::TargetKOutOfRange {
            k: target_k,
            d: data.d(),
        });
    }
    if step == 0 {
        return Err(Error::InvalidRfeStep);
    }

    let mut current = data.clone();
    let mut trace = Vec::new();
    let mut round = 0usize;
    while current.d() > target_k {
        // explicit max_features may exceed the shrunken width
        let mut round_params = params.clone();
        if let Some(mf) = round_params.max_features {
            round_params.max_features = Some(mf.min(current.d()));
        }
        let model = fit_forest(&current, &round_params, derive_seed(seed, "rfe", &[round as u64]))?;
        let importances: Vec<(String, f64)> = current
            .feature_names()
            .iter()
            .cloned()
            .zip(model.feature_importance().values)
            .collect();

        let k_drop = step.min(current.d() - target_k);
        let mut order: Vec<usize> = (0..importances.len()).collect();
        order.sort_by(|&a, &b| {
            importances[a]
                .1
                .total_cmp(&importances[b].1)
                .then_with(|| importances[b].0.cmp(&importances[a].0))
        });
        let dropped: Vec<String> = order[..k_drop]
            .iter()
            .map(|&i| importances[i].0.clone())
            .collect();
        let surviving: Vec<String> = current
            .feature_names()
            .iter()
            .filter(|n| !dropped.contains(n))
            .cloned()
            .collect();
        trace.push(RfeRound {
            round,
            dropped,
            importances,
        });
        current = current.select_features(&surviving)?;
        round += 1;
    }

    Ok(RfeResult {
        selected: current.feature_names().to_vec(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;
    use rand::Rng;

    fn informative_at(col: usize, d: usize, n: usize, seed: u64) -> Dataset {
        let mut rng = rng_from(seed);
        let names = (0..d).map(|i| format!("f{i:03}")).collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            y.push(50.0 * row[col]);
            x.push(row);
        }
        Dataset::new(names, x, y).unwrap()
    }

    fn small_forest() -> ForestParams {
        ForestParams {
            n_trees: 20,
            max_depth: 4,
            ..Default::default()
        }
    }

    #[test]
    fn test_informative_feature_survives() {
        let data = informative_at(1, 3, 100, 17);
        let result = rfe(&data, 1, &small_forest(), 5, 1).unwrap();
        assert_eq!(result.selected, vec!["f001".to_string()]);
        assert_eq!(result.trace.len(), 2);
    }

    #[test]
    fn test_target_equals_d_is_identity() {
        let data = informative_at(0, 4, 30, 2);
        let result = rfe(&data, 4, &small_forest(), 5, 1).unwrap();
        assert_eq!(result.selected, data.feature_names());
        assert!(result.trace.is_empty());
    }

    #[test]
    fn test_step_one_trace_length() {
        let data = informative_at(0, 6, 40, 3);
        let result = rfe(&data, 2, &small_forest(), 5, 1).unwrap();
        assert_eq!(result.trace.len(), 4);
        assert!(result.trace.iter().all(|r| r.dropped.len() == 1));
        assert_eq!(result.selected.len(), 2);
    }

    #[test]
    fn test_step_clamps_at_target() {
        let data = informative_at(0, 6, 40, 3);
        let result = rfe(&data, 2, &small_forest(), 5, 3).unwrap();
        assert_eq!(result.trace.len(), 2);
        assert_eq!(result.trace[0].dropped.len(), 3);
        assert_eq!(result.trace[1].dropped.len(), 1);
    }

    #[test]
    fn test_all_zero_importance_drops_lex_last() {
        // constant target: no splits, all importances zero
        let data = Dataset::new(
            vec!["alpha".into(), "beta".into(), "gamma".into()],
            vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let result = rfe(&data, 1, &small_forest(), 5, 1).unwrap();
        assert_eq!(result.selected, vec!["alpha".to_string()]);
        assert_eq!(result.trace[0].dropped, vec!["gamma".to_string()]);
        assert_eq!(result.trace[1].dropped, vec!["beta".to_string()]);
    }

    #[test]
    fn test_wide_schedule_chain() {
        // 105 -> 40 -> 20 -> 10 -> 5 -> 2, rfe re-applied to each survivor set
        let data = informative_at(7, 105, 40, 23);
        let p = ForestParams {
            n_trees: 8,
            max_depth: 3,
            ..Default::default()
        };
        let mut current = data;
        for (i, &k) in [40usize, 20, 10, 5, 2].iter().enumerate() {
            let result = rfe(&current, k, &p, 100 + i as u64, 5).unwrap();
            assert_eq!(result.selected.len(), k);
            current = current.select_features(&result.selected).unwrap();
        }
        assert_eq!(current.d(), 2);
    }

    #[test]
    fn test_validation() {
        let data = informative_at(0, 3, 10, 1);
        assert!(matches!(
            rfe(&data, 0, &small_forest(), 1, 1),
            Err(Error::TargetKOutOfRange { .. })
        ));
        assert!(matches!(
            rfe(&data, 4, &small_forest(), 1, 1),
            Err(Error::TargetKOutOfRange { .. })
        ));
        assert!(matches!(
            rfe(&data, 1, &small_forest(), 1, 0),
            Err(Error::InvalidRfeStep)
        ));
    }

    #[test]
    fn test_deterministic() {
        let data = informative_at(2, 8, 50, 9);
        let a = rfe(&data, 3, &small_forest(), 77, 2).unwrap();
        let b = rfe(&data, 3, &small_forest(), 77, 2).unwrap();
        assert_eq!(a, b);
    }
}
