//! Command-line front end. Every subcommand resolves its full configuration,
//! writes it to `run_config.json` in the output directory, and produces
//! byte-identical outputs for identical invocations at any worker count.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;

use crate::coverage::CoverageMatrix;
use crate::error::{Error, Result};
use crate::gain::{
    self, compute_all_gains, parse_gain_report, rank_classes, ranking_from_report, Ranking,
    GAIN_REPORT_HEADER,
};
use crate::harness::{
    self, budget_sweep, hp_elimination_schedule, hp_importance, ranking_quality,
    RankingQualityOptions, SweepOptions,
};
use crate::metrics::{self, FeatureTable};
use crate::regression::{fit_forest, fit_linear, Dataset, ForestParams};
use crate::space::HyperParameterSpace;
use crate::strategies::{run_strategy, StrategySpec, STRATEGY_LABELS};
use crate::synthetic::{generate, LandscapeSpec};

#[derive(Parser, Debug)]
#[command(
    name = "tunegain",
    version,
    about = "Budget-aware hyper-parameter tuning on replayable coverage matrices"
)]
struct Cli {
    /// Worker threads (falls back to TUNEGAIN_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract static source metrics from a directory of .java files
    Extract {
        /// Root directory scanned recursively for sources
        #[arg(long)]
        src: PathBuf,
        /// Keyword list file (one per line); defaults to the builtin list
        #[arg(long)]
        keywords: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute per-class tuning gains from a coverage matrix
    Gain {
        #[arg(long)]
        matrix: PathBuf,
        /// Search-space JSON; defaults to the builtin space
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank classes by regression-predicted gain
    Prioritize {
        /// Feature CSV for every class to be ranked
        #[arg(long)]
        features: PathBuf,
        /// Gain report CSV supplying training targets
        #[arg(long)]
        gains: PathBuf,
        /// Regression model: rfr or lr
        #[arg(long, default_value = "rfr")]
        model: String,
        #[arg(long, default_value_t = 200)]
        trees: usize,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tune one strategy at one budget and report per-class outcomes
    Tune {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        space: Option<PathBuf>,
        /// One of: default glob_mg rnd_rs rnd_mg rnd_de pri_rs pri_mg pri_de
        #[arg(long)]
        strategy: String,
        /// Fraction of classes receiving budget (prioritized/random subsets)
        #[arg(long, default_value_t = 0.2)]
        cutoff: f64,
        #[arg(long, default_value_t = 4)]
        budget_hours: u64,
        /// Ranking CSV for prioritized subsets; defaults to the true-gain
        /// ranking computed from the matrix
        #[arg(long)]
        ranking: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep strategies across budgets; emit report CSV and SVG curves
    Sweep {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        space: Option<PathBuf>,
        /// Comma-separated strategy labels; defaults to all eight
        #[arg(long)]
        strategies: Option<String>,
        /// Hours as `lo..hi` (inclusive) or a comma list
        #[arg(long, default_value = "1..24")]
        budgets: String,
        #[arg(long, default_value_t = 0.2)]
        cutoff: f64,
        #[arg(long, default_value_t = 25)]
        reps: usize,
        #[arg(long)]
        ranking: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic coverage landscape with known ground truth
    Synth {
        #[arg(long, default_value_t = 200)]
        classes: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Std-dev of per-observation noise in branches
        #[arg(long, default_value_t = 2.0)]
        noise: f64,
        #[arg(long, default_value_t = 3)]
        seeds_per_pair: usize,
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted rankings against true gains over repeated splits
    Rq1 {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        repeats: usize,
        #[arg(long, default_value_t = 0.4)]
        test_fraction: f64,
        /// NCG cut-off; defaults to 20% of the test split
        #[arg(long)]
        target_k: Option<usize>,
        #[arg(long, default_value_t = 200)]
        trees: usize,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-class hyper-parameter importances and the elimination schedule
    Hpimportance {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        space: Option<PathBuf>,
        /// Comma-separated class ids; defaults to every class
        #[arg(long)]
        classes: Option<String>,
        #[arg(long, default_value_t = 200)]
        trees: usize,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses argv and runs; returns the process exit code. Usage problems exit
/// 2, data or validation failures exit 1.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("TUNEGAIN_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        // ignore failure: the global pool may already exist in-process (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Extract { src, keywords, out } => cmd_extract(&src, keywords.as_deref(), &out),
        Command::Gain { matrix, space, out } => cmd_gain(&matrix, space.as_deref(), &out),
        Command::Prioritize {
            features,
            gains,
            model,
            trees,
            depth,
            seed,
            out,
        } => cmd_prioritize(&features, &gains, &model, trees, depth, seed, &out),
        Command::Tune {
            matrix,
            space,
            strategy,
            cutoff,
            budget_hours,
            ranking,
            seed,
            out,
        } => cmd_tune(
            &matrix,
            space.as_deref(),
            &strategy,
            cutoff,
            budget_hours,
            ranking.as_deref(),
            seed,
            &out,
        ),
        Command::Sweep {
            matrix,
            space,
            strategies,
            budgets,
            cutoff,
            reps,
            ranking,
            seed,
            out,
        } => cmd_sweep(
            &matrix,
            space.as_deref(),
            strategies.as_deref(),
            &budgets,
            cutoff,
            reps,
            ranking.as_deref(),
            seed,
            &out,
        ),
        Command::Synth {
            classes,
            seed,
            noise,
            seeds_per_pair,
            space,
            out,
        } => cmd_synth(classes, seed, noise, seeds_per_pair, space.as_deref(), &out),
        Command::Rq1 {
            matrix,
            features,
            space,
            repeats,
            test_fraction,
            target_k,
            trees,
            depth,
            seed,
            out,
        } => cmd_rq1(
            &matrix,
            &features,
            space.as_deref(),
            repeats,
            test_fraction,
            target_k,
            trees,
            depth,
            seed,
            &out,
        ),
        Command::Hpimportance {
            matrix,
            space,
            classes,
            trees,
            depth,
            seed,
            out,
        } => cmd_hp(
            &matrix,
            space.as_deref(),
            classes.as_deref(),
            trees,
            depth,
            seed,
            &out,
        ),
    }
}

// ==================== shared plumbing ====================

fn load_space(path: Option<&Path>) -> Result<HyperParameterSpace> {
    match path {
        Some(p) => HyperParameterSpace::load(p),
        None => Ok(HyperParameterSpace::builtin()),
    }
}

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// Records the fully resolved run configuration. Key order is sorted by
/// serde_json's map; the output directory and thread count are execution
/// details, not configuration, and stay out.
fn write_run_config(out: &Path, config: serde_json::Value) -> Result<()> {
    let path = out.join("run_config.json");
    let text = serde_json::to_string_pretty(&config)? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn space_field(path: Option<&Path>) -> serde_json::Value {
    match path {
        Some(p) => json!(p.display().to_string()),
        None => json!("builtin"),
    }
}

/// Budgets come as an inclusive `lo..hi` range or a comma list of hours.
fn parse_budgets(text: &str) -> Result<Vec<u64>> {
    let parse_u64 = |s: &str| -> Result<u64> {
        s.trim()
            .parse()
            .map_err(|_| Error::InvalidBudgets)
    };
    if let Some((lo, hi)) = text.split_once("..") {
        let lo = parse_u64(lo)?;
        let hi = parse_u64(hi)?;
        if lo == 0 || lo > hi {
            return Err(Error::InvalidBudgets);
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',').map(parse_u64).collect()
}

pub const RANKING_HEADER: &str = "class_id,score,rank";

fn write_ranking_csv(scores: &[(String, f64)], ranking: &Ranking) -> String {
    let by_id: std::collections::BTreeMap<&str, f64> = scores
        .iter()
        .map(|(id, s)| (id.as_str(), *s))
        .collect();
    let mut text = format!("{RANKING_HEADER}\n");
    for (i, id) in ranking.classes.iter().enumerate() {
        text.push_str(&format!("{id},{},{}\n", by_id[id.as_str()], i + 1));
    }
    text
}

/// Accepts either a gain report or a plain `class_id,score,rank` file.
fn load_ranking(path: &Path) -> Result<Ranking> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = text.lines().next().unwrap_or_default();
    if header == GAIN_REPORT_HEADER {
        let records = parse_gain_report(&text, path)?;
        return Ok(ranking_from_report(&records, "file"));
    }
    if header != RANKING_HEADER {
        return Err(Error::malformed(
            path,
            1,
            format!("expected header `{GAIN_REPORT_HEADER}` or `{RANKING_HEADER}`"),
        ));
    }
    let mut classes = Vec::new();
    for (ix, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::malformed(path, ix + 1, "expected 3 fields"));
        }
        let rank: usize = fields[2]
            .parse()
            .map_err(|_| Error::malformed(path, ix + 1, "bad rank"))?;
        if rank != classes.len() + 1 {
            return Err(Error::malformed(path, ix + 1, "rank out of sequence"));
        }
        classes.push(fields[0].to_string());
    }
    if classes.is_empty() {
        return Err(Error::EmptyScores);
    }
    Ok(Ranking {
        method: "file".into(),
        classes,
    })
}

/// The ranking driving prioritized subsets: an explicit file when given,
/// otherwise the true-gain ranking of the matrix itself.
fn resolve_ranking(matrix: &CoverageMatrix, path: Option<&Path>) -> Result<Ranking> {
    match path {
        Some(p) => load_ranking(p),
        None => {
            let gains = compute_all_gains(matrix)?;
            let scores: Vec<(String, f64)> = gains
                .into_iter()
                .map(|g| (g.class_id, g.gain))
                .collect();
            rank_classes(&scores, "gain")
        }
    }
}

fn save_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

// ==================== subcommands ====================

fn cmd_extract(src: &Path, keywords: Option<&Path>, out: &Path) -> Result<()> {
    let keyword_list = match keywords {
        Some(p) => metrics::load_keyword_list(p)?,
        None => metrics::default_keyword_list(),
    };
    let table = metrics::extract_dir(src, &keyword_list)?;
    prepare_out(out)?;
    table.save(out.join("features.csv"))?;
    write_run_config(
        out,
        json!({
            "command": "extract",
            "src": src.display().to_string(),
            "keywords": keywords.map(|p| p.display().to_string()),
            "n_classes": table.len(),
        }),
    )
}

fn cmd_gain(matrix_path: &Path, space_path: Option<&Path>, out: &Path) -> Result<()> {
    let space = load_space(space_path)?;
    let matrix = CoverageMatrix::load(matrix_path, space)?;
    let gains = compute_all_gains(&matrix)?;
    prepare_out(out)?;
    gain::save_gain_report(&gains, out.join("gains.csv"))?;
    write_run_config(
        out,
        json!({
            "command": "gain",
            "matrix": matrix_path.display().to_string(),
            "space": space_field(space_path),
            "n_classes": gains.len(),
        }),
    )
}

fn cmd_prioritize(
    features_path: &Path,
    gains_path: &Path,
    model: &str,
    trees: usize,
    depth: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let features = FeatureTable::load(features_path)?;
    let report = gain::load_gain_report(gains_path)?;
    let targets: Vec<(String, f64)> = report
        .iter()
        .map(|g| (g.class_id.clone(), g.gain))
        .collect();
    let train = Dataset::from_feature_table(&features, &targets)?;

    let (scores, model_json): (Vec<(String, f64)>, String) = match model {
        "rfr" => {
            let params = ForestParams {
                n_trees: trees,
                max_depth: depth,
                ..Default::default()
            };
            let forest = fit_forest(&train, &params, seed)?;
            let scores = features
                .rows()
                .iter()
                .map(|r| Ok((r.class_id.clone(), forest.predict(&r.values)?)))
                .collect::<Result<Vec<_>>>()?;
            (scores, forest.to_json()?)
        }
        "lr" => {
            let linear = fit_linear(&train)?;
            let scores = features
                .rows()
                .iter()
                .map(|r| Ok((r.class_id.clone(), linear.predict(&r.values)?)))
                .collect::<Result<Vec<_>>>()?;
            (scores, linear.to_json()?)
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    let ranking = rank_classes(&scores, model)?;
    prepare_out(out)?;
    save_text(&out.join("ranking.csv"), &write_ranking_csv(&scores, &ranking))?;
    save_text(&out.join("model.json"), &model_json)?;
    write_run_config(
        out,
        json!({
            "command": "prioritize",
            "features": features_path.display().to_string(),
            "gains": gains_path.display().to_string(),
            "model": model,
            "trees": trees,
            "depth": depth,
            "seed": seed,
        }),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_tune(
    matrix_path: &Path,
    space_path: Option<&Path>,
    strategy: &str,
    cutoff: f64,
    budget_hours: u64,
    ranking_path: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let space = load_space(space_path)?;
    let matrix = CoverageMatrix::load(matrix_path, space)?;
    let spec = StrategySpec::from_label(strategy, cutoff)?;
    let ranking = resolve_ranking(&matrix, ranking_path)?;
    let result = run_strategy(&spec, &matrix, Some(&ranking), budget_hours, seed)?;
    prepare_out(out)?;
    result.save(out.join("tuning.csv"))?;
    write_run_config(
        out,
        json!({
            "command": "tune",
            "matrix": matrix_path.display().to_string(),
            "space": space_field(space_path),
            "strategy": strategy,
            "cutoff": cutoff,
            "budget_hours": budget_hours,
            "ranking": ranking_path.map(|p| p.display().to_string()),
            "seed": seed,
        }),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    matrix_path: &Path,
    space_path: Option<&Path>,
    strategies: Option<&str>,
    budgets: &str,
    cutoff: f64,
    reps: usize,
    ranking_path: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let space = load_space(space_path)?;
    let matrix = CoverageMatrix::load(matrix_path, space)?;
    let labels: Vec<&str> = match strategies {
        Some(list) => list.split(',').map(str::trim).collect(),
        None => STRATEGY_LABELS.to_vec(),
    };
    let specs = labels
        .iter()
        .map(|l| StrategySpec::from_label(l, cutoff))
        .collect::<Result<Vec<_>>>()?;
    let options = SweepOptions {
        budgets: parse_budgets(budgets)?,
        strategies: specs,
        reps,
    };
    let ranking = resolve_ranking(&matrix, ranking_path)?;
    let outcome = budget_sweep(&matrix, Some(&ranking), &options, seed)?;
    prepare_out(out)?;
    harness::report::save_report(&outcome.rows, out.join("report.csv"))?;
    harness::report::save_svg(&outcome.curves, out.join("curves.svg"))?;
    write_run_config(
        out,
        json!({
            "command": "sweep",
            "matrix": matrix_path.display().to_string(),
            "space": space_field(space_path),
            "strategies": labels,
            "budgets": options.budgets,
            "cutoff": cutoff,
            "reps": reps,
            "ranking": ranking_path.map(|p| p.display().to_string()),
            "seed": seed,
            "reference": outcome.reference,
        }),
    )
}

fn cmd_synth(
    classes: usize,
    seed: u64,
    noise: f64,
    seeds_per_pair: usize,
    space_path: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let space = load_space(space_path)?;
    let spec = LandscapeSpec {
        n_classes: classes,
        seed_noise: noise,
        seeds_per_pair,
        seed,
        ..Default::default()
    };
    let land = generate(&spec, &space)?;
    prepare_out(out)?;
    land.matrix.save(out.join("matrix.csv"))?;
    land.features.save(out.join("features.csv"))?;
    gain::save_gain_report(&land.gains, out.join("gains.csv"))?;
    write_run_config(
        out,
        json!({
            "command": "synth",
            "classes": classes,
            "seed": seed,
            "noise": noise,
            "seeds_per_pair": seeds_per_pair,
            "space": space_field(space_path),
        }),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_rq1(
    matrix_path: &Path,
    features_path: &Path,
    space_path: Option<&Path>,
    repeats: usize,
    test_fraction: f64,
    target_k: Option<usize>,
    trees: usize,
    depth: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let space = load_space(space_path)?;
    let matrix = CoverageMatrix::load(matrix_path, space)?;
    let features = FeatureTable::load(features_path)?;
    let options = RankingQualityOptions {
        test_fraction,
        n_repeats: repeats,
        target_k,
        forest: ForestParams {
            n_trees: trees,
            max_depth: depth,
            ..Default::default()
        },
    };
    let quality = ranking_quality(&matrix, &features, &options, seed)?;
    let mut csv = String::from("method,median_ncg,median_auc_ratio,k\n");
    for m in &quality.methods {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            m.method, m.median_ncg, m.median_auc_ratio, quality.k
        ));
    }
    prepare_out(out)?;
    save_text(&out.join("quality.csv"), &csv)?;
    write_run_config(
        out,
        json!({
            "command": "rq1",
            "matrix": matrix_path.display().to_string(),
            "features": features_path.display().to_string(),
            "space": space_field(space_path),
            "repeats": repeats,
            "test_fraction": test_fraction,
            "target_k": target_k,
            "trees": trees,
            "depth": depth,
            "seed": seed,
        }),
    )
}

fn cmd_hp(
    matrix_path: &Path,
    space_path: Option<&Path>,
    classes: Option<&str>,
    trees: usize,
    depth: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let space = load_space(space_path)?;
    let matrix = CoverageMatrix::load(matrix_path, space)?;
    let class_ids: Vec<String> = match classes {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => matrix.class_ids(),
    };
    let params = ForestParams {
        n_trees: trees,
        max_depth: depth,
        ..Default::default()
    };

    let names: Vec<String> = matrix
        .space()
        .params()
        .iter()
        .map(|p| p.name().to_string())
        .collect();
    let mut importance_csv = format!("class_id,{}\n", names.join(","));
    for (i, id) in class_ids.iter().enumerate() {
        let imp = hp_importance(&matrix, id, &params, crate::seeding::derive_seed(seed, "hp", &[i as u64]))?;
        let values: Vec<String> = imp.values.iter().map(f64::to_string).collect();
        importance_csv.push_str(&format!("{id},{}\n", values.join(",")));
    }
    let schedule = hp_elimination_schedule(&matrix, &class_ids, &params, seed)?;
    let mut schedule_csv = String::from("round,dropped\n");
    for r in &schedule.rounds {
        schedule_csv.push_str(&format!("{},{}\n", r.round, r.dropped));
    }
    prepare_out(out)?;
    save_text(&out.join("importance.csv"), &importance_csv)?;
    save_text(&out.join("schedule.csv"), &schedule_csv)?;
    write_run_config(
        out,
        json!({
            "command": "hpimportance",
            "matrix": matrix_path.display().to_string(),
            "space": space_field(space_path),
            "classes": classes,
            "trees": trees,
            "depth": depth,
            "seed": seed,
        }),
    )
}
