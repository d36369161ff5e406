//! Synthetic coverage landscapes with known ground truth. Each class is one
//! of three archetypes: insensitive (flat coverage), sparse (a handful of
//! boosted configurations), or tunable (coverage rises smoothly with gene
//! indices). Feature vectors encode the archetype, its magnitude, and the
//! base size, lightly noised, plus pure-noise columns; downstream regression
//! tests rely on the gains being learnable from these features.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{CoverageMatrix, CoverageRecord};
use crate::error::{Error, Result};
use crate::gain::{compute_all_gains, GainRecord};
use crate::metrics::{FeatureTable, FeatureVector};
use crate::seeding::derive_rng;
use crate::space::HyperParameterSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Archetype {
    Insensitive,
    Sparse,
    Tunable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSpec {
    pub n_classes: usize,
    pub insensitive_fraction: f64,
    pub sparse_fraction: f64,
    pub tunable_fraction: f64,
    /// Inclusive range of flat baseline coverage.
    pub base_branches: (u32, u32),
    /// Inclusive range of the sparse boost / tunable swing.
    pub sparse_boost: (u32, u32),
    pub n_sparse_configs: usize,
    /// Std-dev of the per-observation Gaussian noise, in branches.
    pub seed_noise: f64,
    pub seeds_per_pair: usize,
    pub n_noise_features: usize,
    pub seed: u64,
}

impl Default for LandscapeSpec {
    fn default() -> Self {
        LandscapeSpec {
            n_classes: 200,
            insensitive_fraction: 0.5,
            sparse_fraction: 0.2,
            tunable_fraction: 0.3,
            base_branches: (50, 300),
            sparse_boost: (30, 120),
            n_sparse_configs: 3,
            seed_noise: 2.0,
            seeds_per_pair: 3,
            n_noise_features: 27,
            seed: 42,
        }
    }
}

impl LandscapeSpec {
    fn validate(&self, space: &HyperParameterSpace) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidLandscapeSpec(msg));
        if self.n_classes == 0 {
            return fail("n_classes must be >= 1".into());
        }
        let fracs = [
            self.insensitive_fraction,
            self.sparse_fraction,
            self.tunable_fraction,
        ];
        if fracs.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return fail("archetype fractions must be non-negative".into());
        }
        let sum: f64 = fracs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return fail(format!("archetype fractions sum to {sum}, expected 1"));
        }
        if self.base_branches.0 > self.base_branches.1 {
            return fail("base_branches range is reversed".into());
        }
        if self.sparse_boost.0 > self.sparse_boost.1 || self.sparse_boost.0 == 0 {
            return fail("sparse_boost range must be positive and ordered".into());
        }
        if self.n_sparse_configs == 0 || self.n_sparse_configs > space.size() {
            return fail(format!(
                "n_sparse_configs {} out of range 1..={}",
                self.n_sparse_configs,
                space.size()
            ));
        }
        if !(self.seed_noise >= 0.0) {
            return fail("seed_noise must be >= 0".into());
        }
        if self.seeds_per_pair == 0 {
            return fail("seeds_per_pair must be >= 1".into());
        }
        Ok(())
    }

    /// Largest-remainder apportionment of classes to archetypes.
    fn archetype_counts(&self) -> [usize; 3] {
        let fracs = [
            self.insensitive_fraction,
            self.sparse_fraction,
            self.tunable_fraction,
        ];
        let ideal: Vec<f64> = fracs.iter().map(|f| f * self.n_classes as f64).collect();
        let mut counts: Vec<usize> = ideal.iter().map(|v| v.floor() as usize).collect();
        let mut leftover = self.n_classes - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            let fa = ideal[a] - ideal[a].floor();
            let fb = ideal[b] - ideal[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &i in &order {
            if leftover == 0 {
                break;
            }
            counts[i] += 1;
            leftover -= 1;
        }
        [counts[0], counts[1], counts[2]]
    }
}

/// Everything a generated landscape knows about itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLandscape {
    pub matrix: CoverageMatrix,
    pub features: FeatureTable,
    pub gains: Vec<GainRecord>,
}

pub const INFORMATIVE_FEATURES: [&str; 3] = ["arch_code", "tuning_magnitude", "base_size"];

struct ClassPlan {
    class_id: String,
    archetype: Archetype,
}

pub fn generate(spec: &LandscapeSpec, space: &HyperParameterSpace) -> Result<SyntheticLandscape> {
    spec.validate(space)?;
    let [n_ins, n_sparse, _] = spec.archetype_counts();
    let plans: Vec<ClassPlan> = (0..spec.n_classes)
        .map(|i| ClassPlan {
            class_id: format!("synth.C{i:04}"),
            archetype: if i < n_ins {
                Archetype::Insensitive
            } else if i < n_ins + n_sparse {
                Archetype::Sparse
            } else {
                Archetype::Tunable
            },
        })
        .collect();

    let generated: Vec<(Vec<CoverageRecord>, FeatureVector)> = plans
        .par_iter()
        .enumerate()
        .map(|(i, plan)| {
            let mut rng = derive_rng(spec.seed, "class", &[i as u64]);
            generate_class(spec, space, plan, &mut rng)
        })
        .collect();

    let mut records = Vec::with_capacity(spec.n_classes * space.size() * spec.seeds_per_pair);
    let mut rows = Vec::with_capacity(spec.n_classes);
    for (class_records, row) in generated {
        records.extend(class_records);
        rows.push(row);
    }

    let mut names: Vec<String> = INFORMATIVE_FEATURES.iter().map(|s| s.to_string()).collect();
    names.extend((0..spec.n_noise_features).map(|i| format!("noise_{i:02}")));

    let matrix = CoverageMatrix::from_records(space.clone(), records)?;
    let features = FeatureTable::new(names, rows)?;
    let gains = compute_all_gains(&matrix)?;
    Ok(SyntheticLandscape {
        matrix,
        features,
        gains,
    })
}

fn generate_class(
    spec: &LandscapeSpec,
    space: &HyperParameterSpace,
    plan: &ClassPlan,
    rng: &mut ChaCha8Rng,
) -> (Vec<CoverageRecord>, FeatureVector) {
    let base = rng.random_range(spec.base_branches.0..=spec.base_branches.1);
    let magnitude = match plan.archetype {
        Archetype::Insensitive => 0,
        _ => rng.random_range(spec.sparse_boost.0..=spec.sparse_boost.1),
    };

    // noise-free coverage per config id
    let truth: Vec<u32> = match plan.archetype {
        Archetype::Insensitive => vec![base; space.size()],
        Archetype::Sparse => {
            let mut values = vec![base; space.size()];
            for ix in sample(rng, space.size(), spec.n_sparse_configs) {
                values[ix] = base + magnitude;
            }
            values
        }
        Archetype::Tunable => {
            // smooth separable ramp: mean normalized gene index scales the swing
            let domains: Vec<usize> = space.params().iter().map(|p| p.domain()).collect();
            space
                .enumerate()
                .iter()
                .map(|config| {
                    let lift: f64 = config
                        .genes()
                        .iter()
                        .zip(&domains)
                        .map(|(&g, &m)| g as f64 / (m - 1).max(1) as f64)
                        .sum::<f64>()
                        / domains.len() as f64;
                    base + (magnitude as f64 * lift).round() as u32
                })
                .collect()
        }
    };

    let noise = if spec.seed_noise > 0.0 {
        Some(Normal::new(0.0, spec.seed_noise).expect("validated std-dev"))
    } else {
        None
    };
    let mut records = Vec::with_capacity(space.size() * spec.seeds_per_pair);
    for (config_id, &value) in truth.iter().enumerate() {
        for seed in 0..spec.seeds_per_pair as u64 {
            let observed = match &noise {
                None => value,
                Some(dist) => {
                    let jitter = dist.sample(rng).round();
                    (value as f64 + jitter).max(0.0) as u32
                }
            };
            records.push(CoverageRecord {
                class_id: plan.class_id.clone(),
                config_id,
                seed,
                covered_branches: observed,
                total_branches: None,
            });
        }
    }

    let arch_code = match plan.archetype {
        Archetype::Insensitive => 0.0,
        Archetype::Sparse => 1.0,
        Archetype::Tunable => 2.0,
    };
    // 5% relative jitter keeps the mapping regressive, not a lookup table
    let feature_noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut jitter = |v: f64| v + v.abs() * 0.05 * feature_noise.sample(rng);
    let mut values = vec![
        jitter(arch_code),
        jitter(magnitude as f64),
        jitter(base as f64),
    ];
    for _ in 0..spec.n_noise_features {
        values.push(feature_noise.sample(rng));
    }
    (
        records,
        FeatureVector {
            class_id: plan.class_id.clone(),
            values,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{fit_forest, r_squared, Dataset, ForestParams};
    use crate::space::HyperParameter;

    fn small_space() -> HyperParameterSpace {
        HyperParameterSpace::new(vec![
            HyperParameter::new("p", (0..5).map(|i| i.to_string()).collect(), 0).unwrap(),
            HyperParameter::new("q", (0..4).map(|i| i.to_string()).collect(), 0).unwrap(),
        ])
        .unwrap()
    }

    fn quiet(spec: LandscapeSpec) -> LandscapeSpec {
        LandscapeSpec {
            seed_noise: 0.0,
            ..spec
        }
    }

    #[test]
    fn test_all_insensitive_zero_gain() {
        let spec = quiet(LandscapeSpec {
            n_classes: 12,
            insensitive_fraction: 1.0,
            sparse_fraction: 0.0,
            tunable_fraction: 0.0,
            seeds_per_pair: 2,
            ..Default::default()
        });
        let land = generate(&spec, &small_space()).unwrap();
        assert_eq!(land.gains.len(), 12);
        assert!(land.gains.iter().all(|g| g.gain == 0.0));
        assert!(land.gains.iter().all(|g| g.variation == 0.0 && g.sparsity == 0.0));
    }

    #[test]
    fn test_sparse_closed_form() {
        // 20 configs, 3 boosted by +50 on base 100, one seed, no noise:
        // pooled variance = 50^2 * 0.15 * 0.85 = 318.75, sparsity = 50
        let spec = quiet(LandscapeSpec {
            n_classes: 1,
            insensitive_fraction: 0.0,
            sparse_fraction: 1.0,
            tunable_fraction: 0.0,
            base_branches: (100, 100),
            sparse_boost: (50, 50),
            n_sparse_configs: 3,
            seeds_per_pair: 1,
            ..Default::default()
        });
        let land = generate(&spec, &small_space()).unwrap();
        let g = &land.gains[0];
        assert_eq!(g.sparsity, 50.0);
        assert!((g.variation - 318.75f64.sqrt()).abs() < 1e-12);
        assert!((g.gain - 50.0 * 318.75f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn test_determinism() {
        let spec = LandscapeSpec {
            n_classes: 30,
            ..Default::default()
        };
        let a = generate(&spec, &small_space()).unwrap();
        let b = generate(&spec, &small_space()).unwrap();
        assert_eq!(a, b);
        let c = generate(
            &LandscapeSpec {
                seed: 43,
                ..spec.clone()
            },
            &small_space(),
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn test_parallel_matches_sequential() {
        let spec = LandscapeSpec {
            n_classes: 24,
            ..Default::default()
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| generate(&spec, &small_space()).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| generate(&spec, &small_space()).unwrap());
        assert_eq!(single, multi);
    }

    #[test]
    fn test_matrix_round_trip() {
        let spec = LandscapeSpec {
            n_classes: 10,
            seeds_per_pair: 2,
            ..Default::default()
        };
        let land = generate(&spec, &small_space()).unwrap();
        let mut buf = Vec::new();
        land.matrix.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = CoverageMatrix::parse_csv(&text, small_space(), "mem").unwrap();
        assert_eq!(back, land.matrix);
    }

    #[test]
    fn test_zero_gain_fraction_matches_insensitive_fraction() {
        let spec = quiet(LandscapeSpec {
            n_classes: 40,
            ..Default::default()
        });
        let land = generate(&spec, &small_space()).unwrap();
        let zeros = land.gains.iter().filter(|g| g.gain == 0.0).count();
        assert_eq!(zeros, 20);
    }

    #[test]
    fn test_archetype_counts_largest_remainder() {
        let spec = LandscapeSpec {
            n_classes: 7,
            insensitive_fraction: 0.5,
            sparse_fraction: 0.2,
            tunable_fraction: 0.3,
            ..Default::default()
        };
        // ideals 3.5 / 1.4 / 2.1 -> floors 3/1/2, leftover 1 goes to .5
        assert_eq!(spec.archetype_counts(), [4, 1, 2]);
        let even = LandscapeSpec {
            n_classes: 10,
            ..spec
        };
        assert_eq!(even.archetype_counts(), [5, 2, 3]);
    }

    #[test]
    fn test_feature_table_shape() {
        let spec = LandscapeSpec {
            n_classes: 8,
            n_noise_features: 5,
            ..Default::default()
        };
        let land = generate(&spec, &small_space()).unwrap();
        assert_eq!(land.features.names().len(), 8);
        assert_eq!(land.features.names()[0], "arch_code");
        assert_eq!(land.features.names()[3], "noise_00");
        assert_eq!(land.features.len(), 8);
        assert_eq!(land.features.class_ids()[0], "synth.C0000");
    }

    #[test]
    fn test_validation_errors() {
        let space = small_space();
        let bad_frac = LandscapeSpec {
            insensitive_fraction: 0.9,
            ..Default::default()
        };
        assert!(matches!(
            generate(&bad_frac, &space),
            Err(Error::InvalidLandscapeSpec(_))
        ));
        let bad_sparse = LandscapeSpec {
            n_sparse_configs: 21,
            ..Default::default()
        };
        assert!(matches!(
            generate(&bad_sparse, &space),
            Err(Error::InvalidLandscapeSpec(_))
        ));
        let bad_seeds = LandscapeSpec {
            seeds_per_pair: 0,
            ..Default::default()
        };
        assert!(matches!(
            generate(&bad_seeds, &space),
            Err(Error::InvalidLandscapeSpec(_))
        ));
    }

    #[test]
    fn test_default_spec_gains_learnable() {
        // the landscape must stay learnable for downstream pipeline tests:
        // train on 150 classes, hold out 50, forest R^2 >= 0.7
        let spec = LandscapeSpec::default();
        let land = generate(&spec, &small_space()).unwrap();
        let targets: Vec<(String, f64)> = land
            .gains
            .iter()
            .map(|g| (g.class_id.clone(), g.gain))
            .collect();
        let all = Dataset::from_feature_table(&land.features, &targets).unwrap();
        let names = all.feature_names().to_vec();
        // archetypes are block-assigned, so shuffle before splitting
        let mut order: Vec<usize> = (0..all.n()).collect();
        let mut rng = crate::seeding::rng_from(7);
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let pick = |ix: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
            (
                ix.iter().map(|&i| all.rows()[i].clone()).collect(),
                ix.iter().map(|&i| all.targets()[i]).collect(),
            )
        };
        let (train_rows, train_y) = pick(&order[..150]);
        let (test_rows, test_y) = pick(&order[150..]);
        let train = Dataset::new(names.clone(), train_rows, train_y).unwrap();
        let model = fit_forest(&train, &ForestParams::default(), 9).unwrap();
        let preds = model.predict_all(&test_rows).unwrap();
        let r2 = r_squared(&preds, &test_y).unwrap();
        assert!(r2 >= 0.7, "holdout R^2 = {r2}");
    }
}
