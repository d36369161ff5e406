//! Discrete hyper-parameter grid. A configuration is a vector of value
//! indices, one per parameter; config ids enumerate the grid
//! lexicographically with the first parameter most significant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One tunable parameter: a name, an ordered list of value labels, and the
/// index of the default value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperParameter {
    name: String,
    values: Vec<String>,
    default: usize,
}

impl HyperParameter {
    pub fn new(name: impl Into<String>, values: Vec<String>, default: usize) -> Result<Self> {
        let p = HyperParameter {
            name: name.into(),
            values,
            default,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::EmptyValueList(self.name.clone()));
        }
        for (i, v) in self.values.iter().enumerate() {
            if self.values[..i].contains(v) {
                return Err(Error::DuplicateValueLabel {
                    param: self.name.clone(),
                    label: v.clone(),
                });
            }
        }
        if self.default >= self.values.len() {
            return Err(Error::DefaultIndexOutOfRange {
                param: self.name.clone(),
                index: self.default,
                domain: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    /// Number of values this parameter can take.
    pub fn domain(&self) -> usize {
        self.values.len()
    }

    pub fn default_index(&self) -> usize {
        self.default
    }
}

/// A point in the grid: one value index per parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    genes: Vec<usize>,
}

impl Configuration {
    pub fn new(genes: Vec<usize>) -> Self {
        Configuration { genes }
    }

    pub fn genes(&self) -> &[usize] {
        &self.genes
    }

    pub fn gene(&self, i: usize) -> usize {
        self.genes[i]
    }
}

/// A parameter removed by [`HyperParameterSpace::reduce`], pinned at its
/// default. `parent_position` is its index in the space reduce was called on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinnedParameter {
    param: HyperParameter,
    parent_position: usize,
}

impl PinnedParameter {
    pub fn param(&self) -> &HyperParameter {
        &self.param
    }

    pub fn parent_position(&self) -> usize {
        self.parent_position
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParameterSpace {
    params: Vec<HyperParameter>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pinned: Vec<PinnedParameter>,
}

impl HyperParameterSpace {
    pub fn new(params: Vec<HyperParameter>) -> Result<Self> {
        let space = HyperParameterSpace {
            params,
            pinned: Vec::new(),
        };
        space.validate()?;
        Ok(space)
    }

    fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(Error::EmptySpace);
        }
        for (i, p) in self.params.iter().enumerate() {
            p.validate()?;
            if self.params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::DuplicateParamName(p.name.clone()));
            }
        }
        for pin in &self.pinned {
            pin.param.validate()?;
        }
        self.size_checked()?;
        Ok(())
    }

    /// The grid tuned in the evaluation study: 6 crossover rates, 5
    /// population sizes, 4 elitism rates, 5 selection functions, and the
    /// parent-check toggle; 1200 configurations, defaults marked.
    pub fn builtin() -> Self {
        let mk = |name: &str, values: &[&str], default: usize| HyperParameter {
            name: name.to_string(),
            values: values.iter().map(|s| s.to_string()).collect(),
            default,
        };
        HyperParameterSpace {
            params: vec![
                mk("crossover_rate", &["0", "0.2", "0.5", "0.75", "0.8", "1"], 3),
                mk("population_size", &["4", "10", "50", "100", "200"], 2),
                mk("elitism_rate", &["0%", "1%", "10%", "50%"], 1),
                mk(
                    "selection_function",
                    &[
                        "roulette",
                        "tournament_2",
                        "tournament_10",
                        "rank_1.2",
                        "rank_1.7",
                    ],
                    4,
                ),
                mk("parent_check", &["true", "false"], 0),
            ],
            pinned: Vec::new(),
        }
    }

    pub fn params(&self) -> &[HyperParameter] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, name: &str) -> Option<&HyperParameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn pinned(&self) -> &[PinnedParameter] {
        &self.pinned
    }

    fn size_checked(&self) -> Result<usize> {
        self.params
            .iter()
            .try_fold(1usize, |acc, p| acc.checked_mul(p.domain()))
            .ok_or(Error::ConfigIdOutOfRange {
                id: usize::MAX,
                size: usize::MAX,
            })
    }

    /// Number of grid points: the product of the parameter domains.
    pub fn size(&self) -> usize {
        self.size_checked().expect("space size overflows usize")
    }

    pub fn default_configuration(&self) -> Configuration {
        Configuration::new(self.params.iter().map(|p| p.default).collect())
    }

    pub fn validate_config(&self, config: &Configuration) -> Result<()> {
        if config.genes.len() != self.params.len() {
            return Err(Error::GeneCountMismatch {
                expected: self.params.len(),
                got: config.genes.len(),
            });
        }
        for (i, (&g, p)) in config.genes.iter().zip(&self.params).enumerate() {
            if g >= p.domain() {
                return Err(Error::GeneOutOfRange {
                    index: i,
                    gene: g,
                    param: p.name.clone(),
                    domain: p.domain(),
                });
            }
        }
        Ok(())
    }

    /// Dense id of a configuration; the first parameter is most significant.
    pub fn config_id(&self, config: &Configuration) -> Result<usize> {
        self.validate_config(config)?;
        Ok(config
            .genes
            .iter()
            .zip(&self.params)
            .fold(0usize, |id, (&g, p)| id * p.domain() + g))
    }

    pub fn decode(&self, id: usize) -> Result<Configuration> {
        let size = self.size();
        if id >= size {
            return Err(Error::ConfigIdOutOfRange { id, size });
        }
        let mut rem = id;
        let mut genes = vec![0usize; self.params.len()];
        for (slot, p) in genes.iter_mut().zip(&self.params).rev() {
            *slot = rem % p.domain();
            rem /= p.domain();
        }
        Ok(Configuration::new(genes))
    }

    /// All grid points in id order.
    pub fn enumerate(&self) -> Vec<Configuration> {
        (0..self.size())
            .map(|id| self.decode(id).expect("id < size"))
            .collect()
    }

    /// Value labels for a configuration, in parameter order.
    pub fn labels(&self, config: &Configuration) -> Result<Vec<&str>> {
        self.validate_config(config)?;
        Ok(config
            .genes
            .iter()
            .zip(&self.params)
            .map(|(&g, p)| p.values[g].as_str())
            .collect())
    }

    /// Keep only the named parameters; the rest are pinned at their defaults
    /// and restored by [`expand`](Self::expand). Relative order is preserved.
    pub fn reduce(&self, keep: &[&str]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        for name in keep {
            if self.param(name).is_none() {
                return Err(Error::UnknownParam((*name).to_string()));
            }
        }
        let mut params = Vec::new();
        let mut pinned = Vec::new();
        for (pos, p) in self.params.iter().enumerate() {
            if keep.contains(&p.name.as_str()) {
                params.push(p.clone());
            } else {
                pinned.push(PinnedParameter {
                    param: p.clone(),
                    parent_position: pos,
                });
            }
        }
        HyperParameterSpace { params, pinned }.validate_and_self()
    }

    fn validate_and_self(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Rebuild a configuration of the space this one was reduced from: kept
    /// genes keep their relative order, pinned parameters contribute their
    /// default index at their recorded position.
    pub fn expand(&self, config: &Configuration) -> Result<Configuration> {
        self.validate_config(config)?;
        let total = self.params.len() + self.pinned.len();
        let mut genes = vec![usize::MAX; total];
        for pin in &self.pinned {
            genes[pin.parent_position] = pin.param.default;
        }
        let mut kept = config.genes.iter();
        for slot in genes.iter_mut() {
            if *slot == usize::MAX {
                *slot = *kept.next().expect("kept gene count matches free slots");
            }
        }
        Ok(Configuration::new(genes))
    }

    // ==================== manifest ====================

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let space: HyperParameterSpace = serde_json::from_str(text)?;
        space.validate()?;
        Ok(space)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(&path, self.to_json()).map_err(|e| Error::io(&path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::from_json(&text)
    }
}
