//! Replay store of branch-coverage observations keyed by (class,
//! configuration, seed). Ground truth for a pair is the median over its
//! seeds; a sampled evaluation replays one uniformly drawn seed observation.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::space::HyperParameterSpace;

pub const MATRIX_HEADER: &str = "class_id,config_id,seed,covered_branches";
pub const MATRIX_HEADER_TOTALS: &str = "class_id,config_id,seed,covered_branches,total_branches";

/// One CSV row of the replay matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageRecord {
    pub class_id: String,
    pub config_id: usize,
    pub seed: u64,
    pub covered_branches: u32,
    pub total_branches: Option<u32>,
}

pub fn valid_class_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'$' | b'-'))
}

#[derive(Debug, Clone)]
struct ClassEntry {
    id: String,
    /// Observations per config id, `(seed, covered_branches)` sorted by seed.
    /// An empty vector means the pair is absent from the matrix.
    obs: Vec<Vec<(u64, u32)>>,
    /// Median covered branches per config id; NAN where the pair is absent.
    medians: Vec<f64>,
    total_branches: Option<u32>,
}

impl PartialEq for ClassEntry {
    fn eq(&self, other: &Self) -> bool {
        // medians are derived from obs
        self.id == other.id && self.obs == other.obs && self.total_branches == other.total_branches
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMatrix {
    space: HyperParameterSpace,
    classes: Vec<ClassEntry>, // sorted by id
    seeds_per_pair: usize,
    has_totals: bool,
}

fn median_of_sorted(values: &[u32]) -> f64 {
    let n = values.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        f64::from(values[n / 2])
    } else {
        (f64::from(values[n / 2 - 1]) + f64::from(values[n / 2])) / 2.0
    }
}

impl CoverageMatrix {
    pub fn from_records(space: HyperParameterSpace, records: Vec<CoverageRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let size = space.size();
        let with_totals = records[0].total_branches.is_some();
        let mut by_class: BTreeMap<String, BTreeMap<usize, Vec<(u64, u32)>>> = BTreeMap::new();
        let mut totals: BTreeMap<String, u32> = BTreeMap::new();
        for rec in records {
            if !valid_class_id(&rec.class_id) {
                return Err(Error::InvalidClassId(rec.class_id));
            }
            if rec.config_id >= size {
                return Err(Error::ConfigIdOutOfRange {
                    id: rec.config_id,
                    size,
                });
            }
            if rec.total_branches.is_some() != with_totals {
                return Err(Error::MixedTotalBranches);
            }
            if let Some(t) = rec.total_branches {
                match totals.get(&rec.class_id) {
                    Some(&prev) if prev != t => {
                        return Err(Error::InconsistentTotalBranches {
                            class_id: rec.class_id,
                        });
                    }
                    _ => {
                        totals.insert(rec.class_id.clone(), t);
                    }
                }
            }
            by_class
                .entry(rec.class_id)
                .or_default()
                .entry(rec.config_id)
                .or_default()
                .push((rec.seed, rec.covered_branches));
        }

        let mut seeds_per_pair = 0usize;
        let mut classes = Vec::with_capacity(by_class.len());
        for (id, configs) in by_class {
            let mut obs = vec![Vec::new(); size];
            let mut medians = vec![f64::NAN; size];
            for (config_id, mut pair_obs) in configs {
                pair_obs.sort_unstable_by_key(|&(seed, _)| seed);
                for w in pair_obs.windows(2) {
                    if w[0].0 == w[1].0 {
                        return Err(Error::DuplicateObservation {
                            class_id: id,
                            config_id,
                            seed: w[0].0,
                        });
                    }
                }
                if seeds_per_pair == 0 {
                    seeds_per_pair = pair_obs.len();
                } else if pair_obs.len() != seeds_per_pair {
                    return Err(Error::InconsistentSeedCount {
                        class_id: id,
                        config_id,
                        expected: seeds_per_pair,
                        got: pair_obs.len(),
                    });
                }
                let mut values: Vec<u32> = pair_obs.iter().map(|&(_, v)| v).collect();
                values.sort_unstable();
                medians[config_id] = median_of_sorted(&values);
                obs[config_id] = pair_obs;
            }
            let total_branches = totals.get(&id).copied();
            classes.push(ClassEntry {
                id,
                obs,
                medians,
                total_branches,
            });
        }

        Ok(CoverageMatrix {
            space,
            classes,
            seeds_per_pair,
            has_totals: with_totals,
        })
    }

    // ==================== csv ====================

    pub fn load(path: impl AsRef<Path>, space: HyperParameterSpace) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, space, path)
    }

    pub fn parse_csv(
        text: &str,
        space: HyperParameterSpace,
        path: impl AsRef<Path>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::malformed(path, 1, "missing header"))?;
        let with_totals = match header {
            MATRIX_HEADER => false,
            MATRIX_HEADER_TOTALS => true,
            other => {
                return Err(Error::malformed(
                    path,
                    1,
                    format!("unexpected header `{other}`"),
                ));
            }
        };
        let mut records = Vec::new();
        for (ix, line) in lines {
            let lineno = ix + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let expected = if with_totals { 5 } else { 4 };
            if fields.len() != expected {
                return Err(Error::malformed(
                    path,
                    lineno,
                    format!("expected {expected} fields, got {}", fields.len()),
                ));
            }
            let config_id: usize = fields[1].parse().map_err(|_| {
                Error::malformed(path, lineno, format!("bad config_id `{}`", fields[1]))
            })?;
            let seed: u64 = fields[2]
                .parse()
                .map_err(|_| Error::malformed(path, lineno, format!("bad seed `{}`", fields[2])))?;
            let covered: u32 = fields[3].parse().map_err(|_| {
                Error::malformed(
                    path,
                    lineno,
                    format!("bad covered_branches `{}`", fields[3]),
                )
            })?;
            let total = if with_totals {
                Some(fields[4].parse().map_err(|_| {
                    Error::malformed(path, lineno, format!("bad total_branches `{}`", fields[4]))
                })?)
            } else {
                None
            };
            if !valid_class_id(fields[0]) {
                return Err(Error::malformed(
                    path,
                    lineno,
                    format!("invalid class id `{}`", fields[0]),
                ));
            }
            records.push(CoverageRecord {
                class_id: fields[0].to_string(),
                config_id,
                seed,
                covered_branches: covered,
                total_branches: total,
            });
        }
        Self::from_records(space, records)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        if self.has_totals {
            writeln!(w, "{MATRIX_HEADER_TOTALS}")?;
        } else {
            writeln!(w, "{MATRIX_HEADER}")?;
        }
        for class in &self.classes {
            for (config_id, pair) in class.obs.iter().enumerate() {
                for &(seed, covered) in pair {
                    if let Some(total) = class.total_branches {
                        writeln!(w, "{},{config_id},{seed},{covered},{total}", class.id)?;
                    } else {
                        writeln!(w, "{},{config_id},{seed},{covered}", class.id)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(&path, e))?;
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))
    }

    // ==================== accessors ====================

    pub fn space(&self) -> &HyperParameterSpace {
        &self.space
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Class ids in sorted order.
    pub fn class_ids(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.id.clone()).collect()
    }

    pub fn has_class(&self, class_id: &str) -> bool {
        self.class_index(class_id).is_ok()
    }

    pub fn seeds_per_pair(&self) -> usize {
        self.seeds_per_pair
    }

    pub fn default_config_id(&self) -> usize {
        self.space
            .config_id(&self.space.default_configuration())
            .expect("default configuration is always valid")
    }

    pub fn total_branches(&self, class_id: &str) -> Result<Option<u32>> {
        Ok(self.entry(class_id)?.total_branches)
    }

    fn class_index(&self, class_id: &str) -> Result<usize> {
        self.classes
            .binary_search_by(|c| c.id.as_str().cmp(class_id))
            .map_err(|_| Error::UnknownClass(class_id.to_string()))
    }

    fn entry(&self, class_id: &str) -> Result<&ClassEntry> {
        Ok(&self.classes[self.class_index(class_id)?])
    }

    /// Config ids with observations for this class, ascending.
    pub fn present_configs(&self, class_id: &str) -> Result<Vec<usize>> {
        let entry = self.entry(class_id)?;
        Ok((0..entry.obs.len())
            .filter(|&c| !entry.obs[c].is_empty())
            .collect())
    }

    pub fn observations(&self, class_id: &str, config_id: usize) -> Result<&[(u64, u32)]> {
        let entry = self.entry(class_id)?;
        if config_id >= entry.obs.len() {
            return Err(Error::ConfigIdOutOfRange {
                id: config_id,
                size: entry.obs.len(),
            });
        }
        let pair = &entry.obs[config_id];
        if pair.is_empty() {
            return Err(Error::MissingPair {
                class_id: class_id.to_string(),
                config_id,
            });
        }
        Ok(pair)
    }

    /// Every observation of the class, pooled over (config, seed).
    pub fn pooled_values(&self, class_id: &str) -> Result<Vec<u32>> {
        let entry = self.entry(class_id)?;
        Ok(entry
            .obs
            .iter()
            .flat_map(|pair| pair.iter().map(|&(_, v)| v))
            .collect())
    }

    /// True when every observation of the class has the same value.
    pub fn is_constant_class(&self, class_id: &str) -> Result<bool> {
        let values = self.pooled_values(class_id)?;
        Ok(values.windows(2).all(|w| w[0] == w[1]))
    }

    /// Median covered branches over the pair's seeds.
    pub fn ground_truth(&self, class_id: &str, config_id: usize) -> Result<f64> {
        self.observations(class_id, config_id)?;
        Ok(self.classes[self.class_index(class_id)?].medians[config_id])
    }

    /// One uniformly drawn seed observation (with replacement).
    pub fn sample_evaluation(
        &self,
        class_id: &str,
        config_id: usize,
        rng: &mut impl Rng,
    ) -> Result<u32> {
        let pair = self.observations(class_id, config_id)?;
        let ix = rng.random_range(0..pair.len());
        Ok(pair[ix].1)
    }

    /// Best achievable extra branches over the default configuration,
    /// by ground truth, floored at zero. The default pair must be present.
    pub fn best_extra(&self, class_id: &str) -> Result<f64> {
        let default_gt = self.ground_truth(class_id, self.default_config_id())?;
        let entry = self.entry(class_id)?;
        let best = entry
            .medians
            .iter()
            .filter(|m| !m.is_nan())
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        Ok((best - default_gt).max(0.0))
    }
}
