use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use barn_core::dataset::{
    self, build_environment, rank_dataset, read_env_file, BenchmarkConfig, DatasetManifest, DatasetOptions, EnvFile,
    ExportFormat, GeneratorConfig, RankKey, Rejection,
};
use barn_core::metrics::{compute_all, MetricsReport, StatsPreset};
use barn_core::model::{predict_difficulty, TrainConfig};
use barn_core::sim::{self, World};
use barn_core::{envgen, AutomatonParams, Error, MetricStats, MlpModel, PlannerConfig};

#[derive(Parser)]
#[command(name = "barn", version, about = "Generate, measure, benchmark and rank navigation environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one environment with explicit automaton parameters.
    Generate(GenerateArgs),
    /// Run the full parameter sweep, benchmark it and write a manifest.
    Dataset(DatasetArgs),
    /// Recompute the difficulty metrics of an environment file.
    Metrics(MetricsArgs),
    /// Run simulated trials on an environment file and print the trial CSV.
    Simulate(SimulateArgs),
    /// Train the difficulty regressor on a benchmarked manifest.
    Train(TrainArgs),
    /// Predict the normalized traversal time of an environment.
    Predict(PredictArgs),
    /// Print environment ids from easiest to hardest.
    Rank(RankArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    width: usize,
    #[arg(long, default_value_t = 30)]
    height: usize,
    #[arg(long)]
    fill: f64,
    #[arg(long)]
    iters: usize,
    #[arg(long, default_value_t = 5)]
    fill_threshold: usize,
    #[arg(long, default_value_t = 1)]
    clear_threshold: usize,
    #[arg(long, default_value_t = barn_core::metrics::DEFAULT_MAX_RANGE)]
    max_range: usize,
    /// Comma-separated subset of json,text,pgm.
    #[arg(long, default_value = "json,text,pgm", value_delimiter = ',')]
    formats: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Trials per environment.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = sim::DEFAULT_TIMEOUT_S)]
    timeout: f64,
    /// Skip simulation; the manifest then has no labels.
    #[arg(long)]
    no_benchmark: bool,
    #[arg(long, default_value = "dataset")]
    stats: String,
    #[arg(long, default_value_t = barn_core::metrics::DEFAULT_MAX_RANGE)]
    max_range: usize,
    /// Planner configuration JSON; defaults to the built-in configuration.
    #[arg(long)]
    planner: Option<PathBuf>,
    #[arg(long, default_value = "json,text,pgm", value_delimiter = ',')]
    formats: Vec<String>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    env: PathBuf,
    #[arg(long, default_value_t = barn_core::metrics::DEFAULT_MAX_RANGE)]
    max_range: usize,
    /// `table2` for the reference constants, `dataset` for the stats stored
    /// in the environment file.
    #[arg(long, default_value = "dataset")]
    stats: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    env: PathBuf,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = sim::DEFAULT_TIMEOUT_S)]
    timeout: f64,
    #[arg(long)]
    planner: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of environments held out for evaluation.
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    /// Model file; the training metadata goes to `<out>.json`.
    #[arg(long)]
    out: PathBuf,
    /// Leave the manifest untouched instead of storing predictions in it.
    #[arg(long)]
    no_update: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    env: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    key: String,
}

fn formats(names: &[String]) -> anyhow::Result<Vec<ExportFormat>> {
    Ok(names.iter().map(|n| n.trim().parse()).collect::<Result<_, _>>()?)
}

fn planner_config(path: Option<&Path>) -> anyhow::Result<PlannerConfig> {
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => PlannerConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn generate_cmd(a: GenerateArgs) -> anyhow::Result<()> {
    let formats = formats(&a.formats)?;
    let params = AutomatonParams {
        fill_threshold: a.fill_threshold,
        clear_threshold: a.clear_threshold,
        ..AutomatonParams::new(a.fill, a.iters, a.seed)
    };
    let cfg = GeneratorConfig { width: a.width, height: a.height, max_range: a.max_range, ..GeneratorConfig::default() };
    let grid = envgen::generate(cfg.width, cfg.height, cfg.resolution, &params)?;
    let mut env = match build_environment(grid, params, &cfg)? {
        Ok(env) => env,
        Err(why) => bail!(Rejected(why)),
    };
    env.env_id = format!("env_s{}", a.seed);
    let file = EnvFile::from_bundle(&env, cfg.footprint, &MetricStats::table2(), cfg.max_range)?;
    let files = dataset::export_env(&file, &formats, &a.out, &a.out)?;
    println!("{}", serde_json::to_string_pretty(&files)?);
    Ok(())
}

fn dataset_cmd(a: DatasetArgs) -> anyhow::Result<()> {
    let formats = formats(&a.formats)?;
    let mut opts = DatasetOptions::new(a.seed);
    opts.jobs = a.jobs;
    opts.stats = a.stats.parse()?;
    opts.generator.max_range = a.max_range;
    opts.formats = formats.clone();
    opts.benchmark = if a.no_benchmark {
        None
    } else {
        let cfg = BenchmarkConfig { trials: a.trials, timeout_s: a.timeout, planner: planner_config(a.planner.as_deref())? };
        Some(cfg)
    };
    let mut data = dataset::generate_dataset(&opts)?;
    let manifest = dataset::write_dataset(&mut data, &a.out, &formats)?;
    println!("{}", manifest.display());
    Ok(())
}

fn metrics_cmd(a: MetricsArgs) -> anyhow::Result<()> {
    let file = read_env_file(&a.env)?;
    let stats = match a.stats.parse::<StatsPreset>()? {
        StatsPreset::Table2 => MetricStats::table2(),
        StatsPreset::Dataset => {
            if file.metrics.stats.preset != StatsPreset::Dataset {
                bail!(Error::Config(format!("{} carries no dataset statistics; use --stats table2", a.env.display())));
            }
            file.metrics.stats
        }
    };
    let env = file.into_bundle()?;
    let raw = compute_all(&env.cspace, &env.path, a.max_range)?;
    println!("{}", serde_json::to_string_pretty(&MetricsReport::new(raw, &stats, a.max_range)?)?);
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> anyhow::Result<()> {
    let cfg = planner_config(a.planner.as_deref())?;
    let env = read_env_file(&a.env)?.into_bundle()?;
    let world = World::new(&env.grid, cfg.robot_radius_m);
    let b = sim::benchmark_env(&world, &env.path, a.trials, &cfg, a.seed, a.timeout)?;
    println!("{}", sim::TRIAL_CSV_HEADER);
    for (i, (r, s)) in b.trials.iter().zip(&b.seeds).enumerate() {
        println!("{}", sim::trial_csv_row(&env.env_id, i, *s, r));
    }
    eprintln!("mean {:.6} s/m, variance {:.6}", b.mean, b.variance);
    Ok(())
}

fn train_cmd(a: TrainArgs) -> anyhow::Result<()> {
    let mut manifest = DatasetManifest::load(&a.manifest)?;
    let config = TrainConfig { epochs: a.epochs, learning_rate: a.lr, batch_size: a.batch_size, seed: a.seed };
    let (model, report) = dataset::train_on_manifest(&mut manifest, &config, a.holdout)?;
    model.save(&a.out)?;
    if !a.no_update {
        manifest.save(&a.manifest)?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "final_train_loss": report.final_train_loss,
            "train_examples": report.train_ids.len(),
            "test_examples": report.test_ids.len(),
            "test_mae": report.test_mae,
            "test_spearman": report.test_spearman,
        }))?
    );
    Ok(())
}

fn predict_cmd(a: PredictArgs) -> anyhow::Result<()> {
    let model = MlpModel::load(&a.model)?;
    let file = read_env_file(&a.env)?;
    let stats = model.meta.as_ref().and_then(|m| m.stats).unwrap_or(file.metrics.stats);
    println!("{}", predict_difficulty(&model, &stats, &file.metrics.raw)?);
    Ok(())
}

fn rank_cmd(a: RankArgs) -> anyhow::Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let key: RankKey = a.key.parse()?;
    for id in rank_dataset(&manifest.rows, key)? {
        println!("{id}");
    }
    Ok(())
}

/// A generated world that cannot host a navigation task.
#[derive(Debug)]
struct Rejected(Rejection);

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Rejection::NoEndpoint => f.write_str("no free cell on an edge column of the configuration space"),
            Rejection::Disconnected => f.write_str("no path between the edge endpoints"),
            Rejection::NoObstacle => f.write_str("the configuration space contains no obstacle"),
        }
    }
}

impl std::error::Error for Rejected {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Rejected>().is_some() {
        return 3;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::GenerationExhausted { .. }) => 2,
        Some(Error::NoPath { .. } | Error::NoEndpoint(_) | Error::NoObstacle) => 3,
        Some(Error::Divergence { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate_cmd(a),
        Command::Dataset(a) => dataset_cmd(a),
        Command::Metrics(a) => metrics_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Rank(a) => rank_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
