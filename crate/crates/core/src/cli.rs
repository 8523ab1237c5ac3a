//! Command-line interface: JSON run configuration, subcommand dispatch,
//! and artifact output.
//!
//! Every command is deterministic given its configuration — all randomness
//! flows from the single base seed. Command-line flags override the config
//! file, which overrides built-in defaults. Exit codes: 0 on success, 2
//! for usage or configuration errors, 3 for runtime failures.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::{
    run_nested_cv, run_scenario, write_nested_csv, write_results_csv, Approach, NestedCvRow,
    RunOptions, ScenarioRow,
};
use crate::rng::{derive_seed, salt};
use crate::simdata::{sample_dataset, scenario_grid, GroundTruth, ScenarioSpec};
use crate::stability::{sma, smu, SimilarityMatrix};
use crate::stabsel::{
    selection_frequencies, subsample_solver_options, tune_stabsel, write_frequencies_csv,
    StabSelParams, DEFAULT_N_POINTS,
};
use crate::tuning::{
    epsilon_constraint_select, grid_tune, make_cv_splits, single_criteria_select,
    write_tuning_csv, ConfigPerformance, MeasureSpec, SelectionParams,
};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

/// Sparse model tuning that trades off accuracy against selection
/// stability on data with correlated features.
#[derive(Debug, Parser)]
#[command(name = "stabtune", version, about)]
pub struct Cli {
    /// JSON configuration file; flags given here override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Base RNG seed; every random choice is derived from it.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Directory for output files (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Restrict the experiment grid to the quick p=200 scenarios.
    #[arg(long, global = true)]
    pub desk_scale: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a block-correlated binary-classification dataset.
    Simulate(SimulateArgs),
    /// Tune the sparse model's support size on a dataset.
    Tune(TuneArgs),
    /// Tune and run stability selection on a dataset.
    Stabsel(StabselArgs),
    /// Run the simulation study over the scenario grid.
    Experiment(ExperimentArgs),
    /// Nested cross-validation on a dataset without ground truth.
    NestedCv(NestedCvArgs),
    /// Compute stability measures for a family of feature sets.
    Measures(MeasuresArgs),
}

/// Top-level JSON configuration with one optional section per subcommand.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub simulate: Option<SimulateConfig>,
    pub tune: Option<TuneConfig>,
    pub stabsel: Option<StabselConfig>,
    pub experiment: Option<ExperimentConfig>,
    pub nested_cv: Option<NestedCvConfig>,
    pub measures: Option<MeasuresConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub n: usize,
    pub p: usize,
    pub block_size: usize,
    pub within_corr: f64,
    pub between_corr: f64,
    pub n_generating: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let spec = ScenarioSpec::new(100, 200, 5, 0);
        SimulateConfig {
            n: spec.n,
            p: spec.p,
            block_size: spec.block_size,
            within_corr: spec.within_corr,
            between_corr: spec.between_corr,
            n_generating: spec.n_generating,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneConfig {
    /// Dataset CSV with a header row and a 0/1 label column.
    pub data: Option<PathBuf>,
    /// Label column name (default "y").
    pub label: Option<String>,
    /// adj, unadj or acc.
    pub approach: Option<Approach>,
    /// Ground-truth JSON sidecar; when given, the adjusted measure uses
    /// exact block similarity instead of feature correlations.
    pub ground_truth: Option<PathBuf>,
    pub folds: Option<usize>,
    /// Support sizes to evaluate (default 0..=20, clamped to the data).
    pub k_grid: Option<Vec<usize>>,
    pub theta: Option<f64>,
    pub mc_samples: Option<u32>,
    pub acc_const: Option<f64>,
    pub stab_const: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabselConfig {
    pub data: Option<PathBuf>,
    pub label: Option<String>,
    pub folds: Option<usize>,
    /// Random-search candidates for (cutoff, PFER).
    pub n_points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Scenario ids like "p200_b5"; default: the whole grid.
    pub scenarios: Option<Vec<String>>,
    pub replications: Option<usize>,
    pub approaches: Option<Vec<Approach>>,
    pub run: RunOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NestedCvConfig {
    pub data: Option<PathBuf>,
    pub label: Option<String>,
    pub approaches: Option<Vec<Approach>>,
    pub outer_folds: Option<usize>,
    pub inner_folds: Option<usize>,
    pub run: RunOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasuresConfig {
    /// JSON file {"p": ..., "sets": [[...], ...]} with 0-based indices.
    pub sets: Option<PathBuf>,
    /// When given, also compute the adjusted measure with exact block
    /// similarity of this block size.
    pub block_size: Option<usize>,
    pub theta: Option<f64>,
    pub mc_samples: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Observations.
    #[arg(long)]
    pub n: Option<usize>,
    /// Features.
    #[arg(long)]
    pub p: Option<usize>,
    /// Features per correlated block.
    #[arg(long)]
    pub block_size: Option<usize>,
}

impl SimulateArgs {
    fn resolve(&self, base: Option<SimulateConfig>) -> SimulateConfig {
        let mut cfg = base.unwrap_or_default();
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(bs) = self.block_size {
            cfg.block_size = bs;
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Dataset CSV path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column name.
    #[arg(long)]
    pub label: Option<String>,
    /// adj, unadj or acc.
    #[arg(long)]
    pub approach: Option<String>,
    /// Ground-truth JSON sidecar for exact block similarity.
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
}

impl TuneArgs {
    fn resolve(&self, base: Option<TuneConfig>) -> Result<TuneConfig> {
        let mut cfg = base.unwrap_or_default();
        if let Some(d) = &self.data {
            cfg.data = Some(d.clone());
        }
        if let Some(l) = &self.label {
            cfg.label = Some(l.clone());
        }
        if let Some(a) = &self.approach {
            cfg.approach = Some(a.parse()?);
        }
        if let Some(g) = &self.ground_truth {
            cfg.ground_truth = Some(g.clone());
        }
        if let Some(f) = self.folds {
            cfg.folds = Some(f);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct StabselArgs {
    /// Dataset CSV path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column name.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Random-search candidates.
    #[arg(long)]
    pub n_points: Option<usize>,
}

impl StabselArgs {
    fn resolve(&self, base: Option<StabselConfig>) -> StabselConfig {
        let mut cfg = base.unwrap_or_default();
        if let Some(d) = &self.data {
            cfg.data = Some(d.clone());
        }
        if let Some(l) = &self.label {
            cfg.label = Some(l.clone());
        }
        if let Some(f) = self.folds {
            cfg.folds = Some(f);
        }
        if let Some(n) = self.n_points {
            cfg.n_points = Some(n);
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Comma-separated scenario ids, e.g. "p200_b1,p200_b25".
    #[arg(long)]
    pub scenarios: Option<String>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Comma-separated approaches, e.g. "adj,unadj,acc,stabs,truth".
    #[arg(long)]
    pub approaches: Option<String>,
    /// Record real wall times (makes result files run-dependent).
    #[arg(long)]
    pub timings: bool,
}

impl ExperimentArgs {
    fn resolve(&self, base: Option<ExperimentConfig>) -> Result<ExperimentConfig> {
        let mut cfg = base.unwrap_or_default();
        if let Some(s) = &self.scenarios {
            cfg.scenarios = Some(s.split(',').map(|x| x.trim().to_string()).collect());
        }
        if let Some(r) = self.replications {
            cfg.replications = Some(r);
        }
        if let Some(a) = &self.approaches {
            cfg.approaches = Some(parse_approaches(a)?);
        }
        if self.timings {
            cfg.run.timings = true;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct NestedCvArgs {
    /// Dataset CSV path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column name.
    #[arg(long)]
    pub label: Option<String>,
    /// Comma-separated approaches (default "adj,unadj,acc,stabs").
    #[arg(long)]
    pub approaches: Option<String>,
    #[arg(long)]
    pub outer_folds: Option<usize>,
    #[arg(long)]
    pub inner_folds: Option<usize>,
}

impl NestedCvArgs {
    fn resolve(&self, base: Option<NestedCvConfig>) -> Result<NestedCvConfig> {
        let mut cfg = base.unwrap_or_default();
        if let Some(d) = &self.data {
            cfg.data = Some(d.clone());
        }
        if let Some(l) = &self.label {
            cfg.label = Some(l.clone());
        }
        if let Some(a) = &self.approaches {
            cfg.approaches = Some(parse_approaches(a)?);
        }
        if let Some(f) = self.outer_folds {
            cfg.outer_folds = Some(f);
        }
        if let Some(f) = self.inner_folds {
            cfg.inner_folds = Some(f);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct MeasuresArgs {
    /// JSON file {"p": ..., "sets": [[...], ...]} with 0-based indices.
    #[arg(long)]
    pub sets: Option<PathBuf>,
    /// Also compute the adjusted measure for this block size.
    #[arg(long)]
    pub block_size: Option<usize>,
}

impl MeasuresArgs {
    fn resolve(&self, base: Option<MeasuresConfig>) -> MeasuresConfig {
        let mut cfg = base.unwrap_or_default();
        if let Some(s) = &self.sets {
            cfg.sets = Some(s.clone());
        }
        if let Some(b) = self.block_size {
            cfg.block_size = Some(b);
        }
        cfg
    }
}

fn parse_approaches(list: &str) -> Result<Vec<Approach>> {
    list.split(',').map(|x| x.trim().parse()).collect()
}

/// Parse arguments from the process environment and run; returns the
/// process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let _ = env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or("warn"),
    )
    .try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// 2 for usage and configuration problems, 3 for failures at run time.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_)
        | Error::InvalidData(_)
        | Error::NotPositiveDefinite(_)
        | Error::IndexOutOfRange { .. }
        | Error::CardinalityExceedsDimension { .. }
        | Error::SupportTooLarge { .. }
        | Error::CombinatorialBudget { .. } => 2,
        Error::Csv(inner) => {
            // malformed input tables are config errors; write failures are not
            if matches!(inner.kind(), csv::ErrorKind::Io(_)) {
                3
            } else {
                2
            }
        }
        Error::UndefinedStability
        | Error::DegenerateDesign
        | Error::FoldSolver { .. }
        | Error::Io(_)
        | Error::Json(_) => 3,
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let config: RunConfig = match &cli.config {
        Some(path) => read_json_file(path, "config file")?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    if let Some(threads) = cli.threads.or(config.threads) {
        if threads == 0 {
            return Err(Error::InvalidParameter(
                "--threads must be at least 1".to_string(),
            ));
        }
        // a second initialization (e.g. in tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir).map_err(|e| {
        Error::InvalidParameter(format!(
            "cannot create output directory {}: {e}",
            out_dir.display()
        ))
    })?;

    let written = match &cli.command {
        Command::Simulate(args) => {
            cmd_simulate(&args.resolve(config.simulate), seed, &out_dir)?
        }
        Command::Tune(args) => cmd_tune(&args.resolve(config.tune)?, seed, &out_dir)?,
        Command::Stabsel(args) => {
            cmd_stabsel(&args.resolve(config.stabsel), seed, &out_dir)?
        }
        Command::Experiment(args) => cmd_experiment(
            &args.resolve(config.experiment)?,
            seed,
            cli.desk_scale,
            &out_dir,
        )?,
        Command::NestedCv(args) => {
            cmd_nested_cv(&args.resolve(config.nested_cv)?, seed, &out_dir)?
        }
        Command::Measures(args) => {
            let (files, summary) = cmd_measures(&args.resolve(config.measures), seed, &out_dir)?;
            println!("{summary}");
            files
        }
    };
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Draw one dataset and write `dataset.csv` plus `ground_truth.json`.
pub fn cmd_simulate(cfg: &SimulateConfig, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let spec = ScenarioSpec {
        n: cfg.n,
        p: cfg.p,
        block_size: cfg.block_size,
        within_corr: cfg.within_corr,
        between_corr: cfg.between_corr,
        n_generating: cfg.n_generating,
        seed,
    };
    let (data, truth) = sample_dataset(&spec)?;
    let data_path = out_dir.join("dataset.csv");
    let truth_path = out_dir.join("ground_truth.json");
    data.write_csv_file(&data_path)?;
    write_json_file(&truth, &truth_path)?;
    Ok(vec![data_path, truth_path])
}

/// The tuner's pick, written as `chosen.json`. Accuracy-only tuning has
/// no stability entry.
#[derive(Debug, Serialize, Deserialize)]
pub struct ChosenJson {
    pub approach: Approach,
    pub k: usize,
    pub mean_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<f64>,
    pub fold_support_sizes: Vec<usize>,
}

fn chosen_json(approach: Approach, c: &ConfigPerformance) -> ChosenJson {
    ChosenJson {
        approach,
        k: c.k,
        mean_accuracy: c.mean_accuracy,
        stability: c.stability,
        fold_support_sizes: c.fold_feature_sets.iter().map(|s| s.len()).collect(),
    }
}

/// Cross-validate the support-size grid under one approach and write the
/// per-configuration table (`tuning.csv`) and the choice (`chosen.json`).
pub fn cmd_tune(cfg: &TuneConfig, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let data_path = cfg.data.as_ref().ok_or_else(|| {
        Error::InvalidParameter("tune needs a dataset (--data or config tune.data)".to_string())
    })?;
    let approach = cfg.approach.ok_or_else(|| {
        Error::InvalidParameter(
            "tune needs an approach: adj, unadj or acc (--approach or config tune.approach)"
                .to_string(),
        )
    })?;
    if !matches!(approach, Approach::Adj | Approach::Unadj | Approach::Acc) {
        return Err(Error::InvalidParameter(format!(
            "tune supports adj, unadj and acc; '{approach}' is a separate command"
        )));
    }
    let label = cfg.label.as_deref().unwrap_or("y");
    let data = read_dataset(data_path, label)?;
    let folds = cfg.folds.unwrap_or(10);
    let splits = make_cv_splits(data.n(), folds, seed)?;

    let k_grid = match &cfg.k_grid {
        Some(grid) => grid.clone(),
        None => default_k_grid(&data, &splits),
    };

    let measure = match approach {
        Approach::Acc => None,
        Approach::Unadj => Some(MeasureSpec::unadjusted()),
        Approach::Adj => {
            let mc_seed = derive_seed(seed, &[salt::MEASURE_MC]);
            let mut m = match &cfg.ground_truth {
                Some(path) => {
                    let truth: GroundTruth = read_json_file(path, "ground-truth file")?;
                    MeasureSpec::adjusted_block(truth.block_size, mc_seed)
                }
                None => MeasureSpec::adjusted_correlation(mc_seed),
            };
            if let Some(theta) = cfg.theta {
                m.theta = theta;
            }
            if let Some(samples) = cfg.mc_samples {
                m.mc_samples = samples;
            }
            Some(m)
        }
        _ => unreachable!("rejected above"),
    };

    let configs = grid_tune(&data, &k_grid, &splits, measure.as_ref())?;
    let selection_seed = derive_seed(seed, &[salt::SELECTION]);
    let chosen = match approach {
        Approach::Acc => single_criteria_select(&configs, selection_seed)?,
        _ => {
            let mut params = SelectionParams::new(selection_seed);
            if let Some(a) = cfg.acc_const {
                params.acc_const = a;
            }
            if let Some(s) = cfg.stab_const {
                params.stab_const = s;
            }
            epsilon_constraint_select(&configs, &params)?
        }
    };

    let csv_path = out_dir.join("tuning.csv");
    let json_path = out_dir.join("chosen.json");
    let file = fs::File::create(&csv_path)?;
    write_tuning_csv(&configs, std::io::BufWriter::new(file))?;
    write_json_file(&chosen_json(approach, &chosen), &json_path)?;
    Ok(vec![csv_path, json_path])
}

/// Stability-selection artifacts: tuned parameters plus the full-data
/// selection frequencies they induce.
#[derive(Debug, Serialize, Deserialize)]
pub struct StabselJson {
    pub params: StabSelParams,
    /// Per-subsample support size on the full dataset.
    pub q: usize,
    pub cv_accuracy: f64,
}

/// Tune stability selection and write `frequencies.csv` (one row per
/// feature) and `stabsel.json` (the winning parameters).
pub fn cmd_stabsel(cfg: &StabselConfig, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let data_path = cfg.data.as_ref().ok_or_else(|| {
        Error::InvalidParameter(
            "stabsel needs a dataset (--data or config stabsel.data)".to_string(),
        )
    })?;
    let label = cfg.label.as_deref().unwrap_or("y");
    let data = read_dataset(data_path, label)?;
    let splits = make_cv_splits(data.n(), cfg.folds.unwrap_or(10), seed)?;
    let n_points = cfg.n_points.unwrap_or(DEFAULT_N_POINTS);
    let (params, perf) = tune_stabsel(
        &data,
        &splits,
        n_points,
        derive_seed(seed, &[salt::CANDIDATES]),
    )?;
    let freqs = selection_frequencies(&data, &params, &subsample_solver_options())?;

    let csv_path = out_dir.join("frequencies.csv");
    let json_path = out_dir.join("stabsel.json");
    let file = fs::File::create(&csv_path)?;
    write_frequencies_csv(&freqs, std::io::BufWriter::new(file))?;
    write_json_file(
        &StabselJson {
            q: freqs.q_used,
            cv_accuracy: perf.mean_accuracy,
            params,
        },
        &json_path,
    )?;
    Ok(vec![csv_path, json_path])
}

/// Run the simulation study and write the long-format `results.csv`.
///
/// An explicit scenario filter may name any scenario of the full grid;
/// without a filter the grid is the full one or, with `desk_scale`, its
/// p=200 subset.
pub fn cmd_experiment(
    cfg: &ExperimentConfig,
    seed: u64,
    desk_scale: bool,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let specs = match &cfg.scenarios {
        None => scenario_grid(desk_scale),
        Some(filter) => {
            let grid = scenario_grid(false);
            let mut chosen = Vec::with_capacity(filter.len());
            for id in filter {
                let spec = grid.iter().find(|s| s.scenario_id() == *id).ok_or_else(|| {
                    let valid: Vec<String> = grid.iter().map(|s| s.scenario_id()).collect();
                    Error::InvalidParameter(format!(
                        "unknown scenario '{id}'; valid ids: {}",
                        valid.join(", ")
                    ))
                })?;
                chosen.push(spec.clone());
            }
            chosen
        }
    };
    let replications = cfg.replications.unwrap_or(10);
    let approaches = cfg
        .approaches
        .clone()
        .unwrap_or_else(|| Approach::ALL.to_vec());

    let mut rows: Vec<ScenarioRow> = Vec::new();
    for spec in &specs {
        rows.extend(run_scenario(spec, replications, &approaches, seed, &cfg.run)?);
    }

    let csv_path = out_dir.join("results.csv");
    let file = fs::File::create(&csv_path)?;
    write_results_csv(&rows, std::io::BufWriter::new(file))?;
    Ok(vec![csv_path])
}

/// Nested cross-validation per approach; writes `nested_cv.csv`.
pub fn cmd_nested_cv(cfg: &NestedCvConfig, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let data_path = cfg.data.as_ref().ok_or_else(|| {
        Error::InvalidParameter(
            "nested-cv needs a dataset (--data or config nested_cv.data)".to_string(),
        )
    })?;
    let label = cfg.label.as_deref().unwrap_or("y");
    let data = read_dataset(data_path, label)?;
    let approaches = cfg.approaches.clone().unwrap_or_else(|| {
        vec![Approach::Adj, Approach::Unadj, Approach::Acc, Approach::Stabs]
    });
    let outer = cfg.outer_folds.unwrap_or(10);
    let inner = cfg.inner_folds.unwrap_or(10);

    let mut rows: Vec<NestedCvRow> = Vec::new();
    for &approach in &approaches {
        rows.extend(run_nested_cv(&data, approach, outer, inner, seed, &cfg.run)?);
    }

    let csv_path = out_dir.join("nested_cv.csv");
    let file = fs::File::create(&csv_path)?;
    write_nested_csv(&rows, std::io::BufWriter::new(file))?;
    Ok(vec![csv_path])
}

#[derive(Debug, Deserialize)]
struct SetsFile {
    p: usize,
    sets: Vec<Vec<usize>>,
}

/// Stability scores for a feature-set family, written as `measures.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct MeasuresOutput {
    pub p: usize,
    pub n_sets: usize,
    pub smu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sma: Option<f64>,
    /// Monte-Carlo samples behind the adjusted expectation; 0 when it was
    /// computed exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples_used: Option<u32>,
}

/// Score a feature-set family with the unadjusted measure and, when a
/// block size is given, the block-similarity adjusted measure.
pub fn cmd_measures(
    cfg: &MeasuresConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<(Vec<PathBuf>, String)> {
    let sets_path = cfg.sets.as_ref().ok_or_else(|| {
        Error::InvalidParameter(
            "measures needs a sets file (--sets or config measures.sets)".to_string(),
        )
    })?;
    let parsed: SetsFile = read_json_file(sets_path, "sets file")?;
    let sets: Vec<crate::data::FeatureSet> = parsed
        .sets
        .iter()
        .map(|s| crate::data::FeatureSet::new(s.iter().copied()))
        .collect();

    let unadjusted = smu(&sets, parsed.p)?;
    let mut output = MeasuresOutput {
        p: parsed.p,
        n_sets: sets.len(),
        smu: unadjusted.score,
        sma: None,
        mc_samples_used: None,
    };
    if let Some(block_size) = cfg.block_size {
        let theta = cfg.theta.unwrap_or(crate::stability::DEFAULT_THETA);
        let mc_samples = cfg.mc_samples.unwrap_or(crate::stability::DEFAULT_MC_SAMPLES);
        let sim = SimilarityMatrix::block_structure(parsed.p, block_size, theta)?;
        let adjusted = sma(&sets, &sim, mc_samples, derive_seed(seed, &[salt::MEASURE_MC]))?;
        output.sma = Some(adjusted.score);
        output.mc_samples_used = Some(adjusted.mc_samples_used);
    }

    let json_path = out_dir.join("measures.json");
    write_json_file(&output, &json_path)?;
    let summary = serde_json::to_string(&output)?;
    Ok((vec![json_path], summary))
}

/// Default tuning grid: support sizes 0..=20, capped so the largest still
/// fits every fold's training part.
fn default_k_grid(data: &Dataset, splits: &crate::tuning::CVSplits) -> Vec<usize> {
    let min_fold_train = (0..splits.n_folds())
        .map(|f| data.n() - splits.test_rows(f).len())
        .min()
        .unwrap_or(data.n());
    let cap = 20usize.min(data.p()).min(min_fold_train.saturating_sub(2));
    (0..=cap).collect()
}

fn read_dataset(path: &Path, label: &str) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| {
        Error::InvalidData(format!("cannot open dataset {}: {e}", path.display()))
    })?;
    Dataset::read_csv(BufReader::new(file), label)
}

fn read_json_file<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::InvalidData(format!("cannot read {what} {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidData(format!("malformed {what} {}: {e}", path.display())))
}

fn write_json_file<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
