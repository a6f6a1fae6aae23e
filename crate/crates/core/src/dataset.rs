//! The full sweep: 12 automaton parameter sets x 25 environments, each
//! inflated, given edge endpoints, checked for connectivity, planned and
//! measured; then optionally benchmarked in the simulator, exported and
//! ranked.
//!
//! Every random stream is derived from `(master_seed, parameter set,
//! attempt)` or `(master_seed, environment index)`, so output does not depend
//! on how work is scheduled across threads.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cspace::{inflate, RobotFootprint, DEFAULT_RESOLUTION};
use crate::envgen::{generate, AutomatonParams};
use crate::error::{Error, Result};
use crate::grid::{Cell, OccupancyGrid};
use crate::metrics::{compute_all, MetricStats, MetricVector, MetricsReport, DEFAULT_MAX_RANGE};
use crate::model::{train, LabeledExample, MlpModel, TrainConfig};
use crate::planner::{astar, is_connected, select_endpoints, Path};
use crate::seed::{self, stream};
use crate::sim::{self, PlannerConfig, TrialResult, World};
use crate::stats;

pub const FILL_PERCENTAGES: [f64; 4] = [0.15, 0.20, 0.25, 0.30];
pub const SMOOTHING_ITERATIONS: [usize; 3] = [2, 3, 4];
pub const FILL_THRESHOLD: usize = 5;
pub const CLEAR_THRESHOLD: usize = 1;
pub const REPETITIONS: usize = 25;
pub const MAX_ATTEMPTS_PER_SET: usize = 50_000;
pub const MANIFEST_FORMAT: &str = "barn-manifest-1";
pub const ENV_FORMAT: &str = "barn-env-1";

/// One row of the parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub index: usize,
    pub initial_fill_percentage: f64,
    pub smoothing_iterations: usize,
    pub fill_threshold: usize,
    pub clear_threshold: usize,
    pub repetitions: usize,
}

impl ParameterSet {
    pub fn params(&self, seed: u64) -> AutomatonParams {
        AutomatonParams {
            initial_fill_percentage: self.initial_fill_percentage,
            smoothing_iterations: self.smoothing_iterations,
            fill_threshold: self.fill_threshold,
            clear_threshold: self.clear_threshold,
            seed,
        }
    }

    pub fn label(&self) -> String {
        format!("fill {} / {} iterations", self.initial_fill_percentage, self.smoothing_iterations)
    }
}

/// Fill percentage major, smoothing iterations minor.
pub fn parameter_table() -> Vec<ParameterSet> {
    FILL_PERCENTAGES
        .iter()
        .flat_map(|&p| SMOOTHING_ITERATIONS.iter().map(move |&k| (p, k)))
        .enumerate()
        .map(|(index, (p, k))| ParameterSet {
            index,
            initial_fill_percentage: p,
            smoothing_iterations: k,
            fill_threshold: FILL_THRESHOLD,
            clear_threshold: CLEAR_THRESHOLD,
            repetitions: REPETITIONS,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub footprint: RobotFootprint,
    pub max_range: usize,
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            width: 30,
            height: 30,
            resolution: DEFAULT_RESOLUTION,
            footprint: RobotFootprint::jackal(DEFAULT_RESOLUTION).expect("valid default footprint"),
            max_range: DEFAULT_MAX_RANGE,
            max_attempts: MAX_ATTEMPTS_PER_SET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub mean: f64,
    pub variance: f64,
}

/// Everything known about one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentBundle {
    pub env_id: String,
    pub param_set: usize,
    pub attempt: usize,
    pub params: AutomatonParams,
    pub grid: OccupancyGrid,
    pub cspace: OccupancyGrid,
    pub start: Cell,
    pub goal: Cell,
    pub path: Path,
    pub metrics: MetricVector,
    pub normalized: Option<[f64; 5]>,
    pub benchmark: Option<BenchmarkSummary>,
    pub predicted: Option<f64>,
}

impl EnvironmentBundle {
    pub fn path_length_m(&self) -> f64 {
        self.path.length_m()
    }
}

/// Why a generated world was thrown away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    NoEndpoint,
    Disconnected,
    NoObstacle,
}

pub fn env_seed(master_seed: u64, param_set: usize, attempt: usize) -> u64 {
    seed::derive(master_seed, &[stream::ENVIRONMENT, param_set as u64, attempt as u64])
}

pub fn endpoint_seed(env_seed: u64) -> u64 {
    seed::derive(env_seed, &[stream::ENDPOINTS])
}

/// Turns an obstacle grid into an environment: inflate, pick endpoints,
/// flood-fill check, plan and measure.
pub fn build_environment(
    grid: OccupancyGrid,
    params: AutomatonParams,
    cfg: &GeneratorConfig,
) -> Result<std::result::Result<EnvironmentBundle, Rejection>> {
    let cspace = inflate(&grid, &cfg.footprint)?;
    let (start, goal) = match select_endpoints(&cspace, endpoint_seed(params.seed)) {
        Ok(e) => e,
        Err(Error::NoEndpoint(_)) => return Ok(Err(Rejection::NoEndpoint)),
        Err(e) => return Err(e),
    };
    if !is_connected(&cspace, start, goal)? {
        return Ok(Err(Rejection::Disconnected));
    }
    let path = astar(&cspace, start, goal)?;
    let metrics = match compute_all(&cspace, &path, cfg.max_range) {
        Ok(m) => m,
        Err(Error::NoObstacle) => return Ok(Err(Rejection::NoObstacle)),
        Err(e) => return Err(e),
    };
    Ok(Ok(EnvironmentBundle {
        env_id: String::new(),
        param_set: 0,
        attempt: 0,
        params,
        grid,
        cspace,
        start,
        goal,
        path,
        metrics,
        normalized: None,
        benchmark: None,
        predicted: None,
    }))
}

/// Generates `set.repetitions` valid environments for one parameter set,
/// discarding and regenerating invalid ones.
pub fn generate_set(master_seed: u64, set: &ParameterSet, cfg: &GeneratorConfig) -> Result<Vec<EnvironmentBundle>> {
    let mut out = Vec::with_capacity(set.repetitions);
    let mut attempt = 0;
    while out.len() < set.repetitions {
        if attempt >= cfg.max_attempts {
            return Err(Error::GenerationExhausted { index: set.index, label: set.label(), attempts: attempt });
        }
        let params = set.params(env_seed(master_seed, set.index, attempt));
        let grid = generate(cfg.width, cfg.height, cfg.resolution, &params)?;
        if let Ok(mut env) = build_environment(grid, params, cfg)? {
            env.param_set = set.index;
            env.attempt = attempt;
            out.push(env);
        }
        attempt += 1;
    }
    Ok(out)
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// All parameter sets; ids are assigned in table order.
pub fn generate_environments(
    master_seed: u64,
    sets: &[ParameterSet],
    cfg: &GeneratorConfig,
    jobs: Option<usize>,
) -> Result<Vec<EnvironmentBundle>> {
    let per_set = in_pool(jobs, || {
        sets.par_iter().map(|set| generate_set(master_seed, set, cfg)).collect::<Result<Vec<_>>>()
    })??;
    let mut envs: Vec<EnvironmentBundle> = per_set.into_iter().flatten().collect();
    for (i, env) in envs.iter_mut().enumerate() {
        env.env_id = format!("env_{i:03}");
    }
    Ok(envs)
}

/// Fills in `normalized` for every environment.
pub fn apply_stats(envs: &mut [EnvironmentBundle], stats: &MetricStats) -> Result<()> {
    for env in envs {
        env.normalized = Some(crate::metrics::normalize(&env.metrics, stats)?);
    }
    Ok(())
}

pub fn dataset_stats(envs: &[EnvironmentBundle]) -> Result<MetricStats> {
    let vectors: Vec<MetricVector> = envs.iter().map(|e| e.metrics).collect();
    MetricStats::from_population(&vectors)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub trials: usize,
    pub timeout_s: f64,
    pub planner: PlannerConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { trials: 5, timeout_s: sim::DEFAULT_TIMEOUT_S, planner: PlannerConfig::default() }
    }
}

/// One simulated run, tagged for the trial CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub env_id: String,
    pub trial: usize,
    pub seed: u64,
    pub result: TrialResult,
}

pub fn benchmark_seed(master_seed: u64, env_index: usize) -> u64 {
    seed::derive(master_seed, &[stream::BENCHMARK, env_index as u64])
}

/// Benchmarks one environment; trial `i` runs with seed `base + i`.
pub fn benchmark_environment(
    env: &EnvironmentBundle,
    base_seed: u64,
    cfg: &BenchmarkConfig,
) -> Result<(BenchmarkSummary, Vec<TrialRecord>)> {
    let world = World::new(&env.grid, cfg.planner.robot_radius_m);
    let b = sim::benchmark_env(&world, &env.path, cfg.trials, &cfg.planner, base_seed, cfg.timeout_s)?;
    let records = b
        .trials
        .iter()
        .zip(&b.seeds)
        .enumerate()
        .map(|(trial, (r, &seed))| TrialRecord { env_id: env.env_id.clone(), trial, seed, result: *r })
        .collect();
    Ok((BenchmarkSummary { mean: b.mean, variance: b.variance }, records))
}

/// Benchmarks every environment in parallel; environment `i` gets base seed
/// `benchmark_seed(master_seed, i)`. Records come back in environment order.
pub fn benchmark_environments(
    envs: &mut [EnvironmentBundle],
    master_seed: u64,
    cfg: &BenchmarkConfig,
    jobs: Option<usize>,
) -> Result<Vec<TrialRecord>> {
    let results = in_pool(jobs, || {
        envs.par_iter()
            .enumerate()
            .map(|(i, env)| benchmark_environment(env, benchmark_seed(master_seed, i), cfg))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut records = Vec::new();
    for (env, (summary, recs)) in envs.iter_mut().zip(results) {
        env.benchmark = Some(summary);
        records.extend(recs);
    }
    Ok(records)
}

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut s = String::from(sim::TRIAL_CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&sim::trial_csv_row(&r.env_id, r.trial, r.seed, &r.result));
        s.push('\n');
    }
    s
}

// ---------------------------------------------------------------------------
// Files

/// Self-contained JSON form of an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvFile {
    pub format: String,
    pub env_id: String,
    pub param_set: usize,
    pub attempt: usize,
    pub params: AutomatonParams,
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub footprint: RobotFootprint,
    /// Rows of `0`/`1`, row 0 first.
    pub grid: Vec<String>,
    pub cspace: Vec<String>,
    pub start: Cell,
    pub goal: Cell,
    pub path: Path,
    pub path_length_m: f64,
    pub metrics: MetricsReport,
    pub benchmark: Option<BenchmarkSummary>,
    pub predicted: Option<f64>,
}

fn grid_rows(g: &OccupancyGrid) -> Vec<String> {
    g.cells().chunks(g.width()).map(|row| row.iter().map(|&c| if c { '1' } else { '0' }).collect()).collect()
}

impl EnvFile {
    pub fn from_bundle(env: &EnvironmentBundle, footprint: RobotFootprint, stats: &MetricStats, max_range: usize) -> Result<Self> {
        Ok(Self {
            format: ENV_FORMAT.to_string(),
            env_id: env.env_id.clone(),
            param_set: env.param_set,
            attempt: env.attempt,
            params: env.params,
            width: env.grid.width(),
            height: env.grid.height(),
            resolution: env.grid.resolution(),
            footprint,
            grid: grid_rows(&env.grid),
            cspace: grid_rows(&env.cspace),
            start: env.start,
            goal: env.goal,
            path: env.path.clone(),
            path_length_m: env.path_length_m(),
            metrics: MetricsReport::new(env.metrics, stats, max_range)?,
            benchmark: env.benchmark,
            predicted: env.predicted,
        })
    }

    pub fn into_bundle(self) -> Result<EnvironmentBundle> {
        if self.format != ENV_FORMAT {
            return Err(Error::Config(format!("unsupported environment format {:?}", self.format)));
        }
        let grid = OccupancyGrid::from_rows(&self.grid, self.resolution)?;
        let cspace = OccupancyGrid::from_rows(&self.cspace, self.resolution)?;
        self.path.validate(&cspace)?;
        Ok(EnvironmentBundle {
            env_id: self.env_id,
            param_set: self.param_set,
            attempt: self.attempt,
            params: self.params,
            grid,
            cspace,
            start: self.start,
            goal: self.goal,
            path: self.path,
            metrics: self.metrics.raw,
            normalized: Some(self.metrics.normalized),
            benchmark: self.benchmark,
            predicted: self.predicted,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("environment serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Text,
    Json,
    Pgm,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            "pgm" => Ok(Self::Pgm),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Paths (relative to the dataset root) of one environment's files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvFiles {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub env_json: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cspace_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_pgm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cspace_pgm: Option<String>,
}

fn write(path: &FsPath, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &FsPath) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes the requested formats for one environment into `dest`, named after
/// its id. Returned paths are relative to `root` when `dest` is inside it.
pub fn export_env(env: &EnvFile, formats: &[ExportFormat], dest: &FsPath, root: &FsPath) -> Result<EnvFiles> {
    create_dir(dest)?;
    let rel = |p: &FsPath| p.strip_prefix(root).unwrap_or(p).to_string_lossy().replace('\\', "/");
    let mut files = EnvFiles::default();
    let id = &env.env_id;
    for f in formats {
        match f {
            ExportFormat::Json => {
                let p = dest.join(format!("{id}.json"));
                write(&p, env.to_json())?;
                files.env_json = Some(rel(&p));
            }
            ExportFormat::Text => {
                let grid = OccupancyGrid::from_rows(&env.grid, env.resolution)?;
                let cspace = OccupancyGrid::from_rows(&env.cspace, env.resolution)?;
                let g = dest.join(format!("{id}.grid.txt"));
                let c = dest.join(format!("{id}.cspace.txt"));
                write(&g, grid.to_map_text(None))?;
                write(&c, cspace.to_map_text(Some("cspace")))?;
                files.grid_text = Some(rel(&g));
                files.cspace_text = Some(rel(&c));
            }
            ExportFormat::Pgm => {
                let grid = OccupancyGrid::from_rows(&env.grid, env.resolution)?;
                let cspace = OccupancyGrid::from_rows(&env.cspace, env.resolution)?;
                let g = dest.join(format!("{id}.grid.pgm"));
                let c = dest.join(format!("{id}.cspace.pgm"));
                write(&g, grid.to_pgm())?;
                write(&c, cspace.to_pgm())?;
                files.grid_pgm = Some(rel(&g));
                files.cspace_pgm = Some(rel(&c));
            }
        }
    }
    Ok(files)
}

pub fn read_env_file(path: &FsPath) -> Result<EnvFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

// ---------------------------------------------------------------------------
// Manifest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub env_id: String,
    pub param_set: usize,
    pub attempt: usize,
    pub seed: u64,
    pub start: Cell,
    pub goal: Cell,
    pub path_length_m: f64,
    pub metrics: MetricVector,
    pub normalized: [f64; 5],
    pub benchmark: Option<BenchmarkSummary>,
    pub predicted: Option<f64>,
    pub files: EnvFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub master_seed: u64,
    pub generator: GeneratorConfig,
    pub parameter_table: Vec<ParameterSet>,
    pub stats: MetricStats,
    pub benchmark: Option<BenchmarkConfig>,
    pub rows: Vec<ManifestRow>,
    /// Environment ids from easiest to hardest by benchmarked time, when
    /// benchmarks exist.
    pub ordering: Option<Vec<String>>,
}

impl DatasetManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &FsPath) -> Result<()> {
        write(path, self.to_json())
    }

    /// Resolves a row's environment JSON relative to the manifest location.
    pub fn env_path(&self, manifest_path: &FsPath, row: &ManifestRow) -> Option<PathBuf> {
        let rel = row.files.env_json.as_ref()?;
        Some(manifest_path.parent().unwrap_or(FsPath::new(".")).join(rel))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankKey {
    Benchmarked,
    Predicted,
}

impl std::str::FromStr for RankKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "benchmarked" => Ok(Self::Benchmarked),
            "predicted" => Ok(Self::Predicted),
            other => Err(Error::Config(format!("unknown rank key {other:?}"))),
        }
    }
}

fn key_value(row: &ManifestRow, key: RankKey) -> Result<f64> {
    match key {
        RankKey::Benchmarked => row
            .benchmark
            .map(|b| b.mean)
            .ok_or_else(|| Error::MissingKey(row.env_id.clone(), "benchmarked")),
        RankKey::Predicted => row.predicted.ok_or_else(|| Error::MissingKey(row.env_id.clone(), "predicted")),
    }
}

/// Environment ids in ascending order of `key`; ties by id.
pub fn rank_dataset(rows: &[ManifestRow], key: RankKey) -> Result<Vec<String>> {
    let mut keyed = rows.iter().map(|r| Ok((key_value(r, key)?, r.env_id.clone()))).collect::<Result<Vec<_>>>()?;
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    Ok(keyed.into_iter().map(|(_, id)| id).collect())
}

/// Options for writing a dataset to disk.
#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub master_seed: u64,
    pub generator: GeneratorConfig,
    pub stats: crate::metrics::StatsPreset,
    /// `None` skips benchmarking.
    pub benchmark: Option<BenchmarkConfig>,
    pub formats: Vec<ExportFormat>,
    pub jobs: Option<usize>,
}

impl DatasetOptions {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            generator: GeneratorConfig::default(),
            stats: crate::metrics::StatsPreset::Dataset,
            benchmark: Some(BenchmarkConfig::default()),
            formats: vec![ExportFormat::Json, ExportFormat::Text, ExportFormat::Pgm],
            jobs: None,
        }
    }
}

/// In-memory result of a sweep.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub envs: Vec<EnvironmentBundle>,
    pub trials: Vec<TrialRecord>,
}

/// Runs the sweep (and benchmarks, if configured) without touching disk.
pub fn generate_dataset(opts: &DatasetOptions) -> Result<Dataset> {
    let table = parameter_table();
    let mut envs = generate_environments(opts.master_seed, &table, &opts.generator, opts.jobs)?;
    let stats = match opts.stats {
        crate::metrics::StatsPreset::Dataset => dataset_stats(&envs)?,
        crate::metrics::StatsPreset::Table2 => MetricStats::table2(),
    };
    apply_stats(&mut envs, &stats)?;
    let trials = match &opts.benchmark {
        Some(cfg) => benchmark_environments(&mut envs, opts.master_seed, cfg, opts.jobs)?,
        None => Vec::new(),
    };
    let rows: Vec<ManifestRow> = envs
        .iter()
        .map(|e| ManifestRow {
            env_id: e.env_id.clone(),
            param_set: e.param_set,
            attempt: e.attempt,
            seed: e.params.seed,
            start: e.start,
            goal: e.goal,
            path_length_m: e.path_length_m(),
            metrics: e.metrics,
            normalized: e.normalized.expect("stats applied"),
            benchmark: e.benchmark,
            predicted: e.predicted,
            files: EnvFiles::default(),
        })
        .collect();
    let ordering = if opts.benchmark.is_some() { Some(rank_dataset(&rows, RankKey::Benchmarked)?) } else { None };
    let manifest = DatasetManifest {
        format: MANIFEST_FORMAT.to_string(),
        master_seed: opts.master_seed,
        generator: opts.generator,
        parameter_table: table,
        stats,
        benchmark: opts.benchmark,
        rows,
        ordering,
    };
    Ok(Dataset { manifest, envs, trials })
}

/// Writes `manifest.json`, `trials.csv` (when benchmarked) and one
/// directory per environment under `out`.
pub fn write_dataset(dataset: &mut Dataset, out: &FsPath, formats: &[ExportFormat]) -> Result<PathBuf> {
    create_dir(out)?;
    let envs_dir = out.join("envs");
    let g = dataset.manifest.generator;
    for (row, env) in dataset.manifest.rows.iter_mut().zip(&dataset.envs) {
        let file = EnvFile::from_bundle(env, g.footprint, &dataset.manifest.stats, g.max_range)?;
        row.files = export_env(&file, formats, &envs_dir.join(&env.env_id), out)?;
    }
    if !dataset.trials.is_empty() {
        write(&out.join("trials.csv"), trials_csv(&dataset.trials))?;
    }
    let manifest_path = out.join("manifest.json");
    dataset.manifest.save(&manifest_path)?;
    Ok(manifest_path)
}

// ---------------------------------------------------------------------------
// Training

/// Deterministic train/test partition of `n` items: a SPLIT-stream shuffle,
/// with the first `round(n * holdout)` indices held out. Both halves are
/// returned sorted.
pub fn holdout_split(n: usize, holdout: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&holdout) {
        return Err(Error::Config(format!("holdout fraction must be in [0, 1), got {holdout}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::derive(seed, &[stream::SPLIT])));
    let n_test = (n as f64 * holdout).round() as usize;
    let (mut test, mut train) = (order[..n_test].to_vec(), order[n_test..].to_vec());
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

pub fn labeled_example(row: &ManifestRow) -> Result<LabeledExample> {
    let label = row.benchmark.ok_or_else(|| Error::MissingKey(row.env_id.clone(), "benchmarked"))?.mean;
    Ok(LabeledExample { features: row.normalized, label })
}

/// Held-out quality of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub final_train_loss: f64,
    pub test_mae: Option<f64>,
    pub test_spearman: Option<f64>,
}

/// Trains on the benchmarked rows not held out, evaluates on the rest and
/// writes a prediction into every row. The manifest's normalization stats
/// travel with the model.
pub fn train_on_manifest(
    manifest: &mut DatasetManifest,
    config: &TrainConfig,
    holdout: f64,
) -> Result<(MlpModel, TrainReport)> {
    let examples = manifest.rows.iter().map(labeled_example).collect::<Result<Vec<_>>>()?;
    let (train_idx, test_idx) = holdout_split(examples.len(), holdout, config.seed)?;
    let train_set: Vec<LabeledExample> = train_idx.iter().map(|&i| examples[i]).collect();
    let mut model = train(&train_set, config)?;
    if let Some(meta) = model.meta.as_mut() {
        meta.stats = Some(manifest.stats);
    }
    for row in &mut manifest.rows {
        row.predicted = Some(model.forward(&row.normalized)?);
    }
    let (test_mae, test_spearman) = if test_idx.is_empty() {
        (None, None)
    } else {
        let pred: Vec<f64> = test_idx.iter().map(|&i| manifest.rows[i].predicted.unwrap()).collect();
        let truth: Vec<f64> = test_idx.iter().map(|&i| examples[i].label).collect();
        (Some(stats::mean_abs_error(&pred, &truth)), Some(stats::spearman(&pred, &truth)))
    };
    let ids = |idx: &[usize]| idx.iter().map(|&i| manifest.rows[i].env_id.clone()).collect();
    let report = TrainReport {
        train_ids: ids(&train_idx),
        test_ids: ids(&test_idx),
        final_train_loss: model.meta.as_ref().map_or(f64::NAN, |m| m.final_loss),
        test_mae,
        test_spearman,
    };
    Ok((model, report))
}
