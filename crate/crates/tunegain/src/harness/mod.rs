//! Experiment orchestration: train/test splits, ranking-quality evaluation,
//! budget sweeps over tuning strategies, and hyper-parameter importance.
//! Every operation takes a master seed and derives per-job seeds, so results
//! are bit-identical at any worker-pool size.

pub mod report;
pub mod stats;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::coverage::CoverageMatrix;
use crate::error::{Error, Result};
use crate::gain::{auc_ratio, compute_all_gains, gains_map, ncg, rank_classes, Ranking};
use crate::metrics::FeatureTable;
use crate::regression::{fit_forest, fit_linear, Dataset, ForestParams};
use crate::seeding::{derive_rng, derive_seed};
use crate::strategies::{run_strategy, StrategySpec, STRATEGY_LABELS};
use report::{Curve, ReportRow};
use stats::{mann_whitney_u, median};

// ==================== train/test splits ====================

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Independent uniform partitions, one per repeat. Both sides are returned
/// sorted; the partition depends only on the class set, the fraction, and
/// the seed.
pub fn make_splits(
    class_ids: &[String],
    test_fraction: f64,
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<Split>> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidTestFraction(test_fraction));
    }
    if n_repeats == 0 {
        return Err(Error::NoRepeats);
    }
    let mut ids: Vec<String> = class_ids.to_vec();
    ids.sort();
    for w in ids.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateClassId(w[0].clone()));
        }
    }
    let n = ids.len();
    let test_size = (test_fraction * n as f64).round() as usize;
    if test_size == 0 || test_size >= n {
        return Err(Error::DegenerateSplit {
            n,
            fraction: test_fraction,
        });
    }
    Ok((0..n_repeats)
        .map(|rep| {
            let mut rng = derive_rng(seed, "split", &[rep as u64]);
            let mut shuffled = ids.clone();
            shuffled.shuffle(&mut rng);
            let mut test: Vec<String> = shuffled[..test_size].to_vec();
            let mut train: Vec<String> = shuffled[test_size..].to_vec();
            test.sort();
            train.sort();
            Split { train, test }
        })
        .collect())
}

// ==================== ranking quality (prediction pipeline) ====================

pub const RANKING_METHODS: [&str; 4] = ["optimal", "rfr", "lr", "random"];

#[derive(Debug, Clone, PartialEq)]
pub struct RankingQualityOptions {
    pub test_fraction: f64,
    pub n_repeats: usize,
    /// NCG cut-off; None picks max(1, round(0.2 * test size)).
    pub target_k: Option<usize>,
    pub forest: ForestParams,
}

impl Default for RankingQualityOptions {
    fn default() -> Self {
        RankingQualityOptions {
            test_fraction: 0.4,
            n_repeats: 100,
            target_k: None,
            forest: ForestParams::default(),
        }
    }
}

/// NCG and AUC-ratio per method for one repeat, in `RANKING_METHODS` order.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatScores {
    pub ncg: [f64; 4],
    pub auc_ratio: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub median_ncg: f64,
    pub median_auc_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingQuality {
    /// NCG cut-off actually used.
    pub k: usize,
    pub methods: Vec<MethodSummary>,
    pub per_repeat: Vec<RepeatScores>,
}

/// Measures how well predicted rankings recover true tuning gains. Per
/// repeat: fit forest and linear models on the train split's true gains,
/// rank the test split by prediction, and score NCG@k and AUC ratio against
/// the optimal and a random ordering. Fails with `AllGainsZero` when a test
/// split carries no gain at all (the ratios are undefined there).
pub fn ranking_quality(
    matrix: &CoverageMatrix,
    features: &FeatureTable,
    options: &RankingQualityOptions,
    seed: u64,
) -> Result<RankingQuality> {
    let gains = compute_all_gains(matrix)?;
    if gains.iter().all(|g| g.gain == 0.0) {
        return Err(Error::AllGainsZero);
    }
    let matrix_ids = matrix.class_ids();
    if features.class_ids() != matrix_ids {
        return Err(Error::ClassSetMismatch(
            "feature table and coverage matrix cover different class sets".into(),
        ));
    }
    let all_gains = gains_map(&gains);

    let splits = make_splits(&matrix_ids, options.test_fraction, options.n_repeats, seed)?;
    let test_size = splits[0].test.len();
    let k = match options.target_k {
        Some(k) => {
            if k == 0 || k > test_size {
                return Err(Error::KOutOfRange { k, n: test_size });
            }
            k
        }
        None => ((0.2 * test_size as f64).round() as usize).max(1),
    };

    let per_repeat: Vec<RepeatScores> = splits
        .par_iter()
        .enumerate()
        .map(|(rep, split)| -> Result<RepeatScores> {
            let train_targets: Vec<(String, f64)> = split
                .train
                .iter()
                .map(|id| (id.clone(), all_gains[id]))
                .collect();
            let train = Dataset::from_feature_table(features, &train_targets)?;
            let forest = fit_forest(&train, &options.forest, derive_seed(seed, "forest", &[rep as u64]))?;
            let linear = fit_linear(&train)?;

            let test_gains: BTreeMap<String, f64> = split
                .test
                .iter()
                .map(|id| (id.clone(), all_gains[id]))
                .collect();
            if test_gains.values().all(|&g| g == 0.0) {
                return Err(Error::AllGainsZero);
            }

            let mut forest_scores = Vec::with_capacity(test_size);
            let mut linear_scores = Vec::with_capacity(test_size);
            let mut true_scores = Vec::with_capacity(test_size);
            for id in &split.test {
                let row = features
                    .get(id)
                    .ok_or_else(|| Error::ClassSetMismatch(format!("no features for `{id}`")))?;
                forest_scores.push((id.clone(), forest.predict(row)?));
                linear_scores.push((id.clone(), linear.predict(row)?));
                true_scores.push((id.clone(), all_gains[id]));
            }
            let mut random_order = split.test.clone();
            random_order.shuffle(&mut derive_rng(seed, "random", &[rep as u64]));

            let rankings = [
                rank_classes(&true_scores, "optimal")?,
                rank_classes(&forest_scores, "rfr")?,
                rank_classes(&linear_scores, "lr")?,
                Ranking {
                    method: "random".into(),
                    classes: random_order,
                },
            ];
            let mut ncg_scores = [0.0; 4];
            let mut auc_scores = [0.0; 4];
            for (i, ranking) in rankings.iter().enumerate() {
                ncg_scores[i] = ncg(ranking, &test_gains, k)?;
                auc_scores[i] = auc_ratio(ranking, &test_gains)?;
            }
            Ok(RepeatScores {
                ncg: ncg_scores,
                auc_ratio: auc_scores,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let methods = RANKING_METHODS
        .iter()
        .enumerate()
        .map(|(i, name)| -> Result<MethodSummary> {
            let ncgs: Vec<f64> = per_repeat.iter().map(|r| r.ncg[i]).collect();
            let aucs: Vec<f64> = per_repeat.iter().map(|r| r.auc_ratio[i]).collect();
            Ok(MethodSummary {
                method: (*name).to_string(),
                median_ncg: median(&ncgs)?,
                median_auc_ratio: median(&aucs)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RankingQuality {
        k,
        methods,
        per_repeat,
    })
}

// ==================== budget sweep ====================

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Budget points in hours; strictly increasing, all positive.
    pub budgets: Vec<u64>,
    pub strategies: Vec<StrategySpec>,
    pub reps: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            budgets: (1..=24).collect(),
            strategies: STRATEGY_LABELS
                .iter()
                .map(|l| StrategySpec::from_label(l, 0.2).expect("builtin label"))
                .collect(),
            reps: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Strategy-major, budgets ascending within a strategy.
    pub rows: Vec<ReportRow>,
    pub curves: Vec<Curve>,
    /// Label of the strategy with the highest average ECB (the p-value
    /// reference).
    pub reference: String,
}

/// Runs every (strategy, budget) point `reps` times, keeps the median total
/// extra coverage, and aggregates per strategy: AUC as a unit-width
/// rectangle sum over budgets, average ECB = AUC / |budgets|, and a
/// Mann-Whitney p-value of the strategy's pooled per-rep totals against the
/// best strategy's pool.
pub fn budget_sweep(
    matrix: &CoverageMatrix,
    ranking: Option<&Ranking>,
    options: &SweepOptions,
    seed: u64,
) -> Result<SweepOutcome> {
    if options.budgets.is_empty()
        || options.budgets[0] == 0
        || options.budgets.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::InvalidBudgets);
    }
    if options.strategies.is_empty() {
        return Err(Error::EmptySweep);
    }
    for (i, s) in options.strategies.iter().enumerate() {
        if options.strategies[..i].iter().any(|t| t.label() == s.label()) {
            return Err(Error::DuplicateStrategy(s.label().to_string()));
        }
    }
    if options.reps == 0 {
        return Err(Error::NoRepeats);
    }

    let n_b = options.budgets.len();
    let n_s = options.strategies.len();
    let jobs: Vec<(usize, usize, usize)> = (0..n_s)
        .flat_map(|s| (0..n_b).flat_map(move |b| (0..options.reps).map(move |r| (s, b, r))))
        .collect();
    let totals: Vec<f64> = jobs
        .par_iter()
        .map(|&(s, b, r)| -> Result<f64> {
            let spec = &options.strategies[s];
            let hours = options.budgets[b];
            let job_seed = derive_seed(seed, spec.label(), &[hours, r as u64]);
            let result = run_strategy(spec, matrix, ranking, hours, job_seed)?;
            Ok(result.total_extra)
        })
        .collect::<Result<Vec<_>>>()?;

    // totals laid out job-major: s * (n_b * reps) + b * reps + r
    let pool = |s: usize| -> &[f64] { &totals[s * n_b * options.reps..(s + 1) * n_b * options.reps] };
    let mut medians = vec![vec![0.0f64; n_b]; n_s];
    for s in 0..n_s {
        for b in 0..n_b {
            let start = s * n_b * options.reps + b * options.reps;
            medians[s][b] = median(&totals[start..start + options.reps])?;
        }
    }
    let aucs: Vec<f64> = medians.iter().map(|c| c.iter().sum()).collect();
    let avg_ecbs: Vec<f64> = aucs.iter().map(|a| a / n_b as f64).collect();
    let reference = (0..n_s)
        .max_by(|&a, &b| avg_ecbs[a].total_cmp(&avg_ecbs[b]).then(b.cmp(&a)))
        .expect("non-empty strategies");

    let mut rows = Vec::with_capacity(n_s * n_b);
    let mut curves = Vec::with_capacity(n_s);
    for s in 0..n_s {
        let p_value = if s == reference {
            None
        } else {
            Some(mann_whitney_u(pool(s), pool(reference))?.p_value)
        };
        for b in 0..n_b {
            rows.push(ReportRow {
                strategy: options.strategies[s].label().to_string(),
                budget_hours: options.budgets[b],
                median_extra: medians[s][b],
                auc: aucs[s],
                average_ecb: avg_ecbs[s],
                p_value,
            });
        }
        curves.push(Curve {
            label: options.strategies[s].label().to_string(),
            points: options
                .budgets
                .iter()
                .zip(&medians[s])
                .map(|(&b, &m)| (b, m))
                .collect(),
        });
    }
    Ok(SweepOutcome {
        rows,
        curves,
        reference: options.strategies[reference].label().to_string(),
    })
}

/// Unit-width rectangle AUC of a median curve and its per-budget average.
pub fn average_ecb(medians: &[f64]) -> Result<(f64, f64)> {
    if medians.is_empty() {
        return Err(Error::EmptySample);
    }
    let auc: f64 = medians.iter().sum();
    Ok((auc, auc / medians.len() as f64))
}

// ==================== hyper-parameter importance ====================

#[derive(Debug, Clone, PartialEq)]
pub struct HpImportance {
    /// Hyper-parameter names in space order.
    pub names: Vec<String>,
    /// Importance shares; sum to 1 unless degenerate.
    pub values: Vec<f64>,
    pub degenerate: bool,
}

/// Fits a forest mapping ordinal gene indices to per-config ground-truth
/// coverage for one class, and reports normalized importances. Classes with
/// constant coverage get a zero vector and the degenerate flag.
pub fn hp_importance(
    matrix: &CoverageMatrix,
    class_id: &str,
    params: &ForestParams,
    seed: u64,
) -> Result<HpImportance> {
    let space = matrix.space();
    let names: Vec<String> = space.params().iter().map(|p| p.name().to_string()).collect();
    if matrix.is_constant_class(class_id)? {
        return Ok(HpImportance {
            values: vec![0.0; names.len()],
            names,
            degenerate: true,
        });
    }
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for config_id in matrix.present_configs(class_id)? {
        let config = space.decode(config_id)?;
        rows.push(config.genes().iter().map(|&g| g as f64).collect());
        targets.push(matrix.ground_truth(class_id, config_id)?);
    }
    let data = Dataset::new(names.clone(), rows, targets)?;
    let forest = fit_forest(&data, params, seed)?;
    let importance = forest.feature_importance();
    Ok(HpImportance {
        names,
        values: importance.values,
        degenerate: importance.degenerate,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationRound {
    pub round: usize,
    pub dropped: String,
    /// Least-important votes per surviving parameter, in space order.
    pub votes: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationSchedule {
    /// Parameters in drop order; the last space entry left is not listed.
    pub drops: Vec<String>,
    pub rounds: Vec<EliminationRound>,
}

/// Repeatedly drops the hyper-parameter most often ranked least important
/// across the given classes, refitting per-class forests on the surviving
/// parameters each round, until one parameter remains. Ties at both levels
/// (within a class and across the tally) resolve to the lexicographically
/// smallest name. Degenerate classes abstain; a round where every class
/// abstains fails.
pub fn hp_elimination_schedule(
    matrix: &CoverageMatrix,
    classes: &[String],
    params: &ForestParams,
    seed: u64,
) -> Result<EliminationSchedule> {
    let space = matrix.space();
    let all_names: Vec<String> = space.params().iter().map(|p| p.name().to_string()).collect();
    let mut surviving: Vec<String> = all_names.clone();
    let mut drops = Vec::new();
    let mut rounds = Vec::new();

    let mut round = 0;
    while surviving.len() > 1 {
        let votes: Vec<Option<String>> = classes
            .par_iter()
            .enumerate()
            .map(|(ci, class_id)| -> Result<Option<String>> {
                let imp = class_importance(
                    matrix,
                    class_id,
                    &surviving,
                    params,
                    derive_seed(seed, "elim", &[round as u64, ci as u64]),
                )?;
                Ok(imp)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
        for v in votes.iter().flatten() {
            *tally.entry(v.as_str()).or_insert(0) += 1;
        }
        if tally.is_empty() {
            return Err(Error::AllClassesDegenerate);
        }
        // most votes wins; BTreeMap iteration makes ties lexicographic
        let dropped = tally
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(name, _)| (*name).to_string())
            .expect("non-empty tally");
        rounds.push(EliminationRound {
            round,
            dropped: dropped.clone(),
            votes: surviving
                .iter()
                .map(|n| (n.clone(), tally.get(n.as_str()).copied().unwrap_or(0)))
                .collect(),
        });
        surviving.retain(|n| *n != dropped);
        drops.push(dropped);
        round += 1;
    }
    Ok(EliminationSchedule { drops, rounds })
}

/// Least-important surviving parameter for one class, or None when the
/// class's coverage is constant over the surviving-parameter projection.
fn class_importance(
    matrix: &CoverageMatrix,
    class_id: &str,
    surviving: &[String],
    params: &ForestParams,
    seed: u64,
) -> Result<Option<String>> {
    let space = matrix.space();
    let keep: Vec<usize> = space
        .params()
        .iter()
        .enumerate()
        .filter(|(_, p)| surviving.iter().any(|s| s == p.name()))
        .map(|(i, _)| i)
        .collect();
    if matrix.is_constant_class(class_id)? {
        return Ok(None);
    }
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for config_id in matrix.present_configs(class_id)? {
        let config = space.decode(config_id)?;
        rows.push(keep.iter().map(|&i| config.gene(i) as f64).collect());
        targets.push(matrix.ground_truth(class_id, config_id)?);
    }
    let data = Dataset::new(surviving.to_vec(), rows, targets)?;
    let forest = fit_forest(&data, params, seed)?;
    let imp = forest.feature_importance();
    if imp.degenerate {
        return Ok(None);
    }
    // argmin importance, ties to the lexicographically smallest name
    let least = (0..surviving.len())
        .min_by(|&a, &b| {
            imp.values[a]
                .total_cmp(&imp.values[b])
                .then(surviving[a].cmp(&surviving[b]))
        })
        .expect("non-empty surviving set");
    Ok(Some(surviving[least].clone()))
}
