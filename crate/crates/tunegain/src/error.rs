//! Crate-wide error type. Every fallible operation returns [`Result`].

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // ==================== search space ====================
    #[error("hyper-parameter `{0}` has an empty value list")]
    EmptyValueList(String),
    #[error("hyper-parameter `{param}` repeats value label `{label}`")]
    DuplicateValueLabel { param: String, label: String },
    #[error("hyper-parameter `{param}` default index {index} is out of range (domain {domain})")]
    DefaultIndexOutOfRange {
        param: String,
        index: usize,
        domain: usize,
    },
    #[error("space declares no hyper-parameters")]
    EmptySpace,
    #[error("duplicate hyper-parameter name `{0}`")]
    DuplicateParamName(String),
    #[error("unknown hyper-parameter name `{0}`")]
    UnknownParam(String),
    #[error("reduce called with an empty keep-set")]
    EmptyKeepSet,
    #[error("config id {id} out of range for space of size {size}")]
    ConfigIdOutOfRange { id: usize, size: usize },
    #[error("gene {index} value {gene} out of range for `{param}` (domain {domain})")]
    GeneOutOfRange {
        index: usize,
        gene: usize,
        param: String,
        domain: usize,
    },
    #[error("configuration has {got} genes, space has {expected} parameters")]
    GeneCountMismatch { expected: usize, got: usize },

    // ==================== files / formats ====================
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}:{line}: {message}")]
    MalformedRow {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid class id `{0}` (allowed characters: A-Z a-z 0-9 _ . $ -)")]
    InvalidClassId(String),

    // ==================== coverage matrix ====================
    #[error("coverage matrix is empty")]
    EmptyMatrix,
    #[error("duplicate observation for (class `{class_id}`, config {config_id}, seed {seed})")]
    DuplicateObservation {
        class_id: String,
        config_id: usize,
        seed: u64,
    },
    #[error("class `{class_id}` config {config_id} has {got} seed observations, expected {expected}")]
    InconsistentSeedCount {
        class_id: String,
        config_id: usize,
        expected: usize,
        got: usize,
    },
    #[error("class `{class_id}` reports conflicting total_branches values")]
    InconsistentTotalBranches { class_id: String },
    #[error("total_branches must be present on every row or on none")]
    MixedTotalBranches,
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("no observations for (class `{class_id}`, config {config_id})")]
    MissingPair { class_id: String, config_id: usize },

    // ==================== gain / ranking ====================
    #[error("no class scores given")]
    EmptyScores,
    #[error("duplicate class `{0}` in scores")]
    DuplicateScore(String),
    #[error("score for class `{0}` is not finite")]
    NonFiniteScore(String),
    #[error("ranking and gain table cover different class sets (first difference: `{0}`)")]
    RankingGainMismatch(String),
    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("all tuning gains are zero: metric not applicable")]
    AllGainsZero,

    // ==================== lexer / metrics ====================
    #[error("line {line}: unterminated block comment")]
    UnterminatedBlockComment { line: usize },
    #[error("line {line}: unterminated string literal")]
    UnterminatedStringLiteral { line: usize },
    #[error("line {line}: unterminated char literal")]
    UnterminatedCharLiteral { line: usize },
    #[error("keyword list is empty")]
    EmptyKeywordList,
    #[error("duplicate keyword `{0}` in keyword list")]
    DuplicateKeyword(String),
    #[error("duplicate feature name `{0}`")]
    DuplicateFeatureName(String),
    #[error("duplicate class id `{0}` in feature table")]
    DuplicateClassId(String),
    #[error("feature value for class `{class_id}`, feature `{feature}` is not finite")]
    NonFiniteFeature { class_id: String, feature: String },
    #[error("feature tables cover different class sets (first difference: `{0}`)")]
    ClassSetMismatch(String),
    #[error("no .java files found under `{0}`")]
    NoSourcesFound(String),

    // ==================== regression ====================
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset row {row} has {got} values, expected {expected}")]
    RaggedDataset {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("dataset contains a non-finite value (row {row}, column {col})")]
    NonFiniteValue { row: usize, col: usize },
    #[error("target vector length {got} does not match {expected} rows")]
    TargetLengthMismatch { expected: usize, got: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("input has {got} features, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("target_k = {k} out of range 1..={d}")]
    TargetKOutOfRange { k: usize, d: usize },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("invalid forest parameter: {0}")]
    InvalidForestParams(String),
    #[error("rfe step must be >= 1")]
    InvalidRfeStep,
    #[error("linear system is singular")]
    SingularSystem,

    // ==================== strategies ====================
    #[error("cutoff {0} out of range (0, 1]")]
    InvalidCutoff(f64),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("unknown model `{0}` (expected rfr or lr)")]
    UnknownModel(String),
    #[error("prioritized subset selection requires a ranking")]
    RankingRequired,
    #[error("ranking does not cover class `{0}`")]
    RankingMissingClass(String),
    #[error("budget of {available} evaluations is too small (need at least {needed})")]
    BudgetTooSmall { needed: u64, available: u64 },
    #[error("budget exceeded: {spent} evaluations charged against capacity {capacity}")]
    BudgetExceeded { spent: u64, capacity: u64 },

    // ==================== synthetic ====================
    #[error("invalid landscape spec: {0}")]
    InvalidLandscapeSpec(String),

    // ==================== harness ====================
    #[error("test fraction {0} out of range (0, 1)")]
    InvalidTestFraction(f64),
    #[error("cannot split {n} classes with test fraction {fraction}")]
    DegenerateSplit { n: usize, fraction: f64 },
    #[error("need at least one repeat")]
    NoRepeats,
    #[error("mann-whitney samples must be non-empty")]
    EmptySample,
    #[error("budgets must be a non-empty strictly increasing list of positive hours")]
    InvalidBudgets,
    #[error("sweep needs at least one strategy and one repetition")]
    EmptySweep,
    #[error("duplicate strategy label `{0}` in sweep")]
    DuplicateStrategy(String),
    #[error("report has no rows")]
    EmptyReport,
    #[error("plot has no curves")]
    EmptyPlot,
    #[error("every class has constant coverage: importance not applicable")]
    AllClassesDegenerate,
}

impl Error {
    /// Wrap an io error with the path it occurred on.
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn malformed(path: impl AsRef<std::path::Path>, line: usize, message: impl Into<String>) -> Self {
        Error::MalformedRow {
            path: path.as_ref().display().to_string(),
            line,
            message: message.into(),
        }
    }
}
