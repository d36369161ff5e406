//! Tuning gain: variation (population std-dev) times sparsity (max minus
//! median), both over a class's pooled (config, seed) observations. Higher
//! gain means tuning that class is more likely to pay off. Also the ranking
//! quality metrics used to compare class orderings: normalized cumulative
//! gain at a cut-off and the ratio of cumulative-gain AUCs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coverage::CoverageMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRecord {
    pub class_id: String,
    pub variation: f64,
    pub sparsity: f64,
    pub gain: f64,
}

/// An ordering of classes, best candidate first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub method: String,
    pub classes: Vec<String>,
}

/// Population standard deviation (divide by N), max, and median of a pooled
/// observation multiset.
fn pooled_stats(values: &[u32]) -> (f64, f64, f64) {
    debug_assert!(!values.is_empty());
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let var = values
        .iter()
        .map(|&v| {
            let d = f64::from(v) - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let max = f64::from(*sorted.last().expect("non-empty"));
    let median = if sorted.len() % 2 == 1 {
        f64::from(sorted[sorted.len() / 2])
    } else {
        (f64::from(sorted[sorted.len() / 2 - 1]) + f64::from(sorted[sorted.len() / 2])) / 2.0
    };
    (var.sqrt(), max, median)
}

pub fn compute_gain(matrix: &CoverageMatrix, class_id: &str) -> Result<GainRecord> {
    let values = matrix.pooled_values(class_id)?;
    let (variation, max, median) = pooled_stats(&values);
    let sparsity = max - median;
    Ok(GainRecord {
        class_id: class_id.to_string(),
        variation,
        sparsity,
        gain: variation * sparsity,
    })
}

/// Gain for every class of the matrix, in sorted class order.
pub fn compute_all_gains(matrix: &CoverageMatrix) -> Result<Vec<GainRecord>> {
    matrix
        .class_ids()
        .iter()
        .map(|id| compute_gain(matrix, id))
        .collect()
}

pub fn gains_map(records: &[GainRecord]) -> BTreeMap<String, f64> {
    records
        .iter()
        .map(|r| (r.class_id.clone(), r.gain))
        .collect()
}

/// Rank classes by descending score; ties break by ascending class id.
pub fn rank_classes(scores: &[(String, f64)], method: &str) -> Result<Ranking> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    for (i, (id, score)) in scores.iter().enumerate() {
        if !score.is_finite() {
            return Err(Error::NonFiniteScore(id.clone()));
        }
        if scores[..i].iter().any(|(other, _)| other == id) {
            return Err(Error::DuplicateScore(id.clone()));
        }
    }
    let mut order: Vec<&(String, f64)> = scores.iter().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Ranking {
        method: method.to_string(),
        classes: order.into_iter().map(|(id, _)| id.clone()).collect(),
    })
}

fn check_cover(ranking: &Ranking, true_gains: &BTreeMap<String, f64>) -> Result<()> {
    if ranking.classes.is_empty() {
        return Err(Error::EmptyScores);
    }
    for id in &ranking.classes {
        if !true_gains.contains_key(id) {
            return Err(Error::RankingGainMismatch(id.clone()));
        }
    }
    if true_gains.len() != ranking.classes.len() {
        let ranked: std::collections::BTreeSet<&str> =
            ranking.classes.iter().map(String::as_str).collect();
        let missing = true_gains
            .keys()
            .find(|k| !ranked.contains(k.as_str()))
            .expect("sets differ");
        return Err(Error::RankingGainMismatch(missing.clone()));
    }
    Ok(())
}

/// Cumulative true gain along the ranking: curve[i] is the gain collected by
/// tuning the first i + 1 classes.
pub fn cumulative_gain_curve(
    ranking: &Ranking,
    true_gains: &BTreeMap<String, f64>,
) -> Result<Vec<f64>> {
    check_cover(ranking, true_gains)?;
    let mut acc = 0.0;
    Ok(ranking
        .classes
        .iter()
        .map(|id| {
            acc += true_gains[id];
            acc
        })
        .collect())
}

fn optimal_curve(true_gains: &BTreeMap<String, f64>) -> Vec<f64> {
    let mut gains: Vec<f64> = true_gains.values().copied().collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    gains
        .iter()
        .map(|g| {
            acc += g;
            acc
        })
        .collect()
}

/// Normalized cumulative gain at cut-off k: gain collected by the ranking's
/// first k classes over the gain an optimal ordering collects with k classes.
/// All-zero gain tables make the metric undefined and return an error.
pub fn ncg(ranking: &Ranking, true_gains: &BTreeMap<String, f64>, k: usize) -> Result<f64> {
    check_cover(ranking, true_gains)?;
    let n = ranking.classes.len();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    if true_gains.values().all(|&g| g == 0.0) {
        return Err(Error::AllGainsZero);
    }
    let curve = cumulative_gain_curve(ranking, true_gains)?;
    let optimal = optimal_curve(true_gains);
    Ok(curve[k - 1] / optimal[k - 1])
}

/// Area under the cumulative-gain curve over the area under the optimal
/// curve, with unit-width steps at k = 1..n.
pub fn auc_ratio(ranking: &Ranking, true_gains: &BTreeMap<String, f64>) -> Result<f64> {
    check_cover(ranking, true_gains)?;
    if true_gains.values().all(|&g| g == 0.0) {
        return Err(Error::AllGainsZero);
    }
    let curve = cumulative_gain_curve(ranking, true_gains)?;
    let optimal = optimal_curve(true_gains);
    Ok(curve.iter().sum::<f64>() / optimal.iter().sum::<f64>())
}

// ==================== gain report csv ====================

pub const GAIN_REPORT_HEADER: &str = "class_id,variation,sparsity,gain,rank";

/// Rows ordered by rank: descending gain, ties by ascending class id.
pub fn write_gain_report(records: &[GainRecord], mut w: impl std::io::Write) -> std::io::Result<()> {
    let mut order: Vec<&GainRecord> = records.iter().collect();
    order.sort_by(|a, b| b.gain.total_cmp(&a.gain).then_with(|| a.class_id.cmp(&b.class_id)));
    writeln!(w, "{GAIN_REPORT_HEADER}")?;
    for (i, r) in order.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.class_id,
            r.variation,
            r.sparsity,
            r.gain,
            i + 1
        )?;
    }
    Ok(())
}

pub fn save_gain_report(records: &[GainRecord], path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_gain_report(records, &mut buf).map_err(|e| Error::io(&path, e))?;
    std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))
}

/// Records come back in rank order (rank column must be 1..n in sequence).
pub fn load_gain_report(path: impl AsRef<std::path::Path>) -> Result<Vec<GainRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_gain_report(&text, path)
}

pub fn parse_gain_report(text: &str, path: impl AsRef<std::path::Path>) -> Result<Vec<GainRecord>> {
    let path = path.as_ref();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == GAIN_REPORT_HEADER => {}
        _ => {
            return Err(Error::malformed(
                path,
                1,
                format!("expected header `{GAIN_REPORT_HEADER}`"),
            ))
        }
    }
    let mut records = Vec::new();
    for (ix, line) in lines {
        let lineno = ix + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::malformed(
                path,
                lineno,
                format!("expected 5 fields, got {}", fields.len()),
            ));
        }
        let parse = |raw: &str, col: &str| -> Result<f64> {
            raw.parse().map_err(|_| {
                Error::malformed(path, lineno, format!("non-numeric {col} `{raw}`"))
            })
        };
        let rank: usize = fields[4]
            .parse()
            .map_err(|_| Error::malformed(path, lineno, format!("bad rank `{}`", fields[4])))?;
        if rank != records.len() + 1 {
            return Err(Error::malformed(
                path,
                lineno,
                format!("rank {} out of sequence, expected {}", rank, records.len() + 1),
            ));
        }
        let record = GainRecord {
            class_id: fields[0].to_string(),
            variation: parse(fields[1], "variation")?,
            sparsity: parse(fields[2], "sparsity")?,
            gain: parse(fields[3], "gain")?,
        };
        if records.iter().any(|r: &GainRecord| r.class_id == record.class_id) {
            return Err(Error::DuplicateScore(record.class_id));
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::EmptyScores);
    }
    Ok(records)
}

/// Treat already-ordered records (e.g. a loaded report) as a ranking.
pub fn ranking_from_report(records: &[GainRecord], method: &str) -> Ranking {
    Ranking {
        method: method.to_string(),
        classes: records.iter().map(|r| r.class_id.clone()).collect(),
    }
}
