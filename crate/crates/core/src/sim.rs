//! Kinematic stand-in for the simulated benchmark trials.
//!
//! The un-inflated grid becomes a continuous world of square obstacles and a
//! circular robot body. A differential-drive (unicycle) robot follows the A*
//! reference path using a dynamic-window local planner: reachable
//! `(v, w)` pairs are sampled, rolled out over a short horizon, filtered for
//! collisions and scored on clearance, distance to the reference path and
//! progress toward a lookahead point on it.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cell, OccupancyGrid};
use crate::planner::{astar, path_length_m, Path};
use crate::seed;

/// Added to the elapsed time of every trial that does not reach the goal.
pub const FAILURE_PENALTY_S: f64 = 30.0;
pub const DEFAULT_TIMEOUT_S: f64 = 50.0;
/// Half of the 0.508 m footprint bound.
pub const ROBOT_RADIUS_M: f64 = 0.254;
pub const GOAL_TOLERANCE_M: f64 = 0.2;
/// Contact within this distance of the body radius counts as touching, not
/// overlapping; C-space paths sit exactly one radius from obstacle edges.
pub const CONTACT_EPS_M: f64 = 1e-9;

/// Clearance values are exact up to this distance and saturate beyond it.
const CLEARANCE_CAP_M: f64 = 1.0;
const MIN_SCORE_SPAN_M: f64 = 0.05;
/// Floor on the per-term score normalization span, so that differences far
/// below the grid resolution are not stretched to full weight.
/// Clearance raster samples per cell side.
const RASTER_SUBDIV: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub w: f64,
}

impl RobotState {
    pub fn at_rest(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading, v: 0.0, w: 0.0 }
    }

    /// Exact constant-twist motion over `dt`.
    pub fn advance(&self, v: f64, w: f64, dt: f64) -> Self {
        let (x, y, heading) = if w.abs() < 1e-9 {
            (self.x + v * self.heading.cos() * dt, self.y + v * self.heading.sin() * dt, self.heading)
        } else {
            let h = self.heading + w * dt;
            (
                self.x + v / w * (h.sin() - self.heading.sin()),
                self.y - v / w * (h.cos() - self.heading.cos()),
                h,
            )
        };
        Self { x, y, heading, v, w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub clearance: f64,
    pub path: f64,
    pub progress: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub v_max: f64,
    pub w_max: f64,
    /// Linear acceleration limit, m/s^2.
    pub acc_lin: f64,
    /// Angular acceleration limit, rad/s^2.
    pub acc_ang: f64,
    pub v_samples: usize,
    pub w_samples: usize,
    /// Extra uniformly drawn samples per step; the source of run-to-run spread.
    pub random_samples: usize,
    pub horizon_s: f64,
    pub control_period_s: f64,
    /// Collision-checked integration substeps per control period.
    pub substeps: usize,
    pub weights: ScoreWeights,
    /// Distance along the reference path to the local goal; keep it above
    /// `v_max * horizon_s` or full-speed rollouts overshoot the local goal.
    pub lookahead_m: f64,
    /// Clearance beyond the body radius that still earns score.
    pub clearance_horizon_m: f64,
    pub robot_radius_m: f64,
    pub goal_tolerance_m: f64,
    /// A trial stalls when it moves less than `stall_distance_m` over
    /// `stall_window_s`.
    pub stall_window_s: f64,
    pub stall_distance_m: f64,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            v_max: 0.5,
            w_max: 1.57,
            acc_lin: 1.0,
            acc_ang: 3.0,
            v_samples: 6,
            w_samples: 11,
            random_samples: 6,
            horizon_s: 1.5,
            control_period_s: 0.1,
            substeps: 4,
            weights: ScoreWeights { clearance: 0.3, path: 0.4, progress: 0.3 },
            lookahead_m: 1.0,
            clearance_horizon_m: 0.3,
            robot_radius_m: ROBOT_RADIUS_M,
            goal_tolerance_m: GOAL_TOLERANCE_M,
            stall_window_s: 5.0,
            stall_distance_m: 0.05,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("v_max", self.v_max),
            ("w_max", self.w_max),
            ("acc_lin", self.acc_lin),
            ("acc_ang", self.acc_ang),
            ("horizon_s", self.horizon_s),
            ("control_period_s", self.control_period_s),
            ("lookahead_m", self.lookahead_m),
            ("clearance_horizon_m", self.clearance_horizon_m),
            ("robot_radius_m", self.robot_radius_m),
            ("goal_tolerance_m", self.goal_tolerance_m),
            ("stall_window_s", self.stall_window_s),
            ("weights.clearance", self.weights.clearance),
            ("weights.path", self.weights.path),
            ("weights.progress", self.weights.progress),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.v_samples < 2 || self.w_samples < 2 {
            return Err(Error::Config("at least 2 samples per velocity dimension".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Continuous obstacle world built from an occupancy grid. Each occupied
/// cell is a solid square; the map rectangle is walled for the robot center.
#[derive(Debug, Clone)]
pub struct World {
    grid: OccupancyGrid,
    radius: f64,
    raster: Vec<f64>,
    raster_w: usize,
    raster_h: usize,
    raster_step: f64,
}

impl World {
    pub fn new(grid: &OccupancyGrid, robot_radius_m: f64) -> Self {
        let step = grid.resolution() / RASTER_SUBDIV as f64;
        let (rw, rh) = (grid.width() * RASTER_SUBDIV, grid.height() * RASTER_SUBDIV);
        let mut world = Self {
            grid: grid.clone(),
            radius: robot_radius_m,
            raster: Vec::new(),
            raster_w: rw,
            raster_h: rh,
            raster_step: step,
        };
        let raster = (0..rw * rh)
            .map(|i| world.exact_clearance((i % rw) as f64 * step + step / 2.0, (i / rw) as f64 * step + step / 2.0))
            .collect();
        world.raster = raster;
        world
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn extent(&self) -> (f64, f64) {
        let r = self.grid.resolution();
        (self.grid.width() as f64 * r, self.grid.height() as f64 * r)
    }

    pub fn cell_center(&self, c: Cell) -> (f64, f64) {
        let r = self.grid.resolution();
        ((c.x as f64 + 0.5) * r, (c.y as f64 + 0.5) * r)
    }

    /// Distance from a point to the nearest obstacle square, saturating at
    /// `CLEARANCE_CAP_M`.
    pub fn exact_clearance(&self, px: f64, py: f64) -> f64 {
        let res = self.grid.resolution();
        let cx = (px / res).floor() as isize;
        let cy = (py / res).floor() as isize;
        let mut best = CLEARANCE_CAP_M;
        for ring in 0isize.. {
            // Any cell on this ring is at least (ring - 1) cells away.
            if (ring - 1) as f64 * res >= best {
                break;
            }
            for dy in -ring..=ring {
                let step = if dy.abs() == ring { 1 } else { 2 * ring.max(1) };
                let mut dx = -ring;
                while dx <= ring {
                    if self.grid.get(cx + dx, cy + dy) == Some(true) {
                        let x0 = (cx + dx) as f64 * res;
                        let y0 = (cy + dy) as f64 * res;
                        let ex = (x0 - px).max(px - x0 - res).max(0.0);
                        let ey = (y0 - py).max(py - y0 - res).max(0.0);
                        best = best.min(ex.hypot(ey));
                    }
                    dx += step;
                }
            }
        }
        best
    }

    fn raster_lookup(&self, px: f64, py: f64) -> f64 {
        let a = ((px / self.raster_step).floor() as isize).clamp(0, self.raster_w as isize - 1) as usize;
        let b = ((py / self.raster_step).floor() as isize).clamp(0, self.raster_h as isize - 1) as usize;
        self.raster[b * self.raster_w + a]
    }

    /// Approximate clearance (within half a raster diagonal of exact).
    pub fn clearance(&self, px: f64, py: f64) -> f64 {
        self.raster_lookup(px, py)
    }

    fn inside(&self, px: f64, py: f64) -> bool {
        let (w, h) = self.extent();
        (0.0..=w).contains(&px) && (0.0..=h).contains(&py)
    }

    /// True when the robot body centered at `(px, py)` overlaps an obstacle,
    /// or the center leaves the map.
    pub fn collides(&self, px: f64, py: f64) -> bool {
        if !self.inside(px, py) {
            return true;
        }
        let slack = self.raster_step * std::f64::consts::FRAC_1_SQRT_2;
        let approx = self.raster_lookup(px, py);
        let limit = self.radius - CONTACT_EPS_M;
        if approx - slack >= limit {
            return false;
        }
        if approx + slack < limit {
            return true;
        }
        self.exact_clearance(px, py) < limit
    }
}

/// Reference path in world coordinates plus cumulative arc length.
#[derive(Debug, Clone)]
pub struct GlobalPath {
    points: Vec<(f64, f64)>,
    arc: Vec<f64>,
}

impl GlobalPath {
    pub fn new(world: &World, path: &Path) -> Self {
        let points: Vec<(f64, f64)> = path.cells.iter().map(|&c| world.cell_center(c)).collect();
        let mut arc = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                let q = points[i - 1];
                acc += (p.0 - q.0).hypot(p.1 - q.1);
            }
            arc.push(acc);
        }
        Self { points, arc }
    }

    pub fn goal(&self) -> (f64, f64) {
        *self.points.last().expect("non-empty path")
    }

    fn nearest(&self, x: f64, y: f64) -> (usize, f64) {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p.0 - x).hypot(p.1 - y)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// Distance to the reference polyline.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        if self.points.len() == 1 {
            let p = self.points[0];
            return (p.0 - x).hypot(p.1 - y);
        }
        self.points
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let (dx, dy) = (b.0 - a.0, b.1 - a.1);
                let t = (((x - a.0) * dx + (y - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
                (a.0 + t * dx - x).hypot(a.1 + t * dy - y)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().expect("non-empty path")
    }

    /// Arc-length coordinate and distance of the closest polyline point
    /// among segments overlapping `[s_lo, s_hi]`. Ties go to the smaller
    /// coordinate.
    pub fn project(&self, x: f64, y: f64, s_lo: f64, s_hi: f64) -> (f64, f64) {
        if self.points.len() == 1 {
            let p = self.points[0];
            return (0.0, (p.0 - x).hypot(p.1 - y));
        }
        let mut best = (0.0, f64::INFINITY);
        for (i, w) in self.points.windows(2).enumerate() {
            if self.arc[i + 1] < s_lo || self.arc[i] > s_hi {
                continue;
            }
            let (a, b) = (w[0], w[1]);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len2 = dx * dx + dy * dy;
            let t = (((x - a.0) * dx + (y - a.1) * dy) / len2).clamp(0.0, 1.0);
            let d = (a.0 + t * dx - x).hypot(a.1 + t * dy - y);
            if d < best.1 {
                best = (self.arc[i] + t * (self.arc[i + 1] - self.arc[i]), d);
            }
        }
        best
    }

    /// Arc-length coordinate of the closest point on the whole path.
    pub fn station(&self, x: f64, y: f64) -> f64 {
        self.project(x, y, f64::NEG_INFINITY, f64::INFINITY).0
    }

    /// Point `lookahead` meters of arc past the vertex closest to `(x, y)`.
    pub fn local_goal(&self, x: f64, y: f64, lookahead: f64) -> (f64, f64) {
        let (i, _) = self.nearest(x, y);
        let target = self.arc[i] + lookahead;
        let j = self.arc[i..].iter().position(|&a| a >= target).map_or(self.points.len() - 1, |k| i + k);
        self.points[j]
    }
}

struct Rollout {
    v: f64,
    w: f64,
    min_clearance: f64,
    end: RobotState,
}

/// Follows `(v, w)` for the horizon, checking collision at the simulator's
/// substep resolution. `None` if any checked pose collides.
fn rollout(world: &World, state: &RobotState, v: f64, w: f64, config: &PlannerConfig) -> Option<Rollout> {
    let h = config.control_period_s / config.substeps as f64;
    let steps = (config.horizon_s / h).round().max(1.0) as usize;
    // Heading sin/cos advance by a fixed rotation per substep.
    let (sd, cd) = (w * h).sin_cos();
    let (mut sin, mut cos) = state.heading.sin_cos();
    let (mut x, mut y) = (state.x, state.y);
    let mut min_clearance = f64::INFINITY;
    for _ in 0..steps {
        let (s1, c1) = (sin * cd + cos * sd, cos * cd - sin * sd);
        if w.abs() < 1e-9 {
            x += v * cos * h;
            y += v * sin * h;
        } else {
            x += v / w * (s1 - sin);
            y -= v / w * (c1 - cos);
        }
        (sin, cos) = (s1, c1);
        if world.collides(x, y) {
            return None;
        }
        min_clearance = min_clearance.min(world.clearance(x, y));
    }
    let end = RobotState { x, y, heading: state.heading + w * h * steps as f64, v, w };
    Some(Rollout { v, w, min_clearance, end })
}

/// Velocity window reachable within one control period.
pub fn dynamic_window(state: &RobotState, config: &PlannerConfig) -> ((f64, f64), (f64, f64)) {
    let dt = config.control_period_s;
    let v_lo = (state.v - config.acc_lin * dt).max(0.0);
    let v_hi = (state.v + config.acc_lin * dt).min(config.v_max);
    let w_lo = (state.w - config.acc_ang * dt).max(-config.w_max);
    let w_hi = (state.w + config.acc_ang * dt).min(config.w_max);
    ((v_lo, v_hi), (w_lo, w_hi))
}

fn lerp(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    lo + (hi - lo) * i as f64 / (n - 1) as f64
}

/// One planning cycle. Returns the `(v, w)` command with the best score, or
/// the in-place recovery rotation `(0, w_max)` if every rollout collides.
pub fn dwa_step(
    world: &World,
    state: &RobotState,
    global_path: &GlobalPath,
    config: &PlannerConfig,
    rng: &mut seed::Rng,
) -> (f64, f64) {
    let ((v_lo, v_hi), (w_lo, w_hi)) = dynamic_window(state, config);
    let mut samples = Vec::with_capacity(config.v_samples * config.w_samples + config.random_samples);
    for i in 0..config.v_samples {
        for j in 0..config.w_samples {
            samples.push((lerp(v_lo, v_hi, i, config.v_samples), lerp(w_lo, w_hi, j, config.w_samples)));
        }
    }
    for _ in 0..config.random_samples {
        samples.push((rng.gen_range(v_lo..=v_hi), rng.gen_range(w_lo..=w_hi)));
    }

    let survivors: Vec<Rollout> = samples.iter().filter_map(|&(v, w)| rollout(world, state, v, w, config)).collect();
    if survivors.is_empty() {
        return (0.0, config.w_max);
    }

    // Progress is arc length gained along the reference path, capped at the
    // local goal `lookahead_m` ahead; projections are searched near the
    // current station so a path that doubles back is not skipped.
    let s0 = global_path.station(state.x, state.y);
    let s_goal = (s0 + config.lookahead_m).min(global_path.length());
    let window = (s0 - config.v_max * config.horizon_s, s_goal);
    let terms: Vec<[f64; 3]> = survivors
        .iter()
        .map(|r| {
            let clear = (r.min_clearance - world.radius()).clamp(0.0, config.clearance_horizon_m);
            let path = -global_path.distance(r.end.x, r.end.y);
            let (s_end, _) = global_path.project(r.end.x, r.end.y, window.0, window.1);
            let progress = s_end.min(s_goal) - s0;
            [clear, path, progress]
        })
        .collect();
    // Min-max normalize each term over the survivors, with a floor on the
    // span so that millimeter differences are not blown up to full weight.
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for t in &terms {
        for k in 0..3 {
            lo[k] = lo[k].min(t[k]);
            hi[k] = hi[k].max(t[k]);
        }
    }
    let weights = [config.weights.clearance, config.weights.path, config.weights.progress];
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, t) in terms.iter().enumerate() {
        let score: f64 = (0..3).map(|k| weights[k] * (t[k] - lo[k]) / (hi[k] - lo[k]).max(MIN_SCORE_SPAN_M)).sum();
        if score > best.0 {
            best = (score, i);
        }
    }
    let r = &survivors[best.1];
    (r.v, r.w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Collision,
    Stall,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub success: bool,
    pub outcome: Outcome,
    /// Seconds, including the failure penalty.
    pub traversal_time: f64,
    pub path_length: f64,
    /// Seconds per meter of reference path.
    pub normalized_time: f64,
}

/// Per-control-step record, for inspecting a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub time: f64,
    pub state: RobotState,
}

fn clamp_toward(current: f64, target: f64, max_delta: f64, limit: f64) -> f64 {
    (current + (target - current).clamp(-max_delta, max_delta)).clamp(-limit, limit)
}

/// Plans the reference path on `cspace` and drives it in the world built
/// from `grid`. Success when the robot center comes within the goal
/// tolerance; collision, stall and timeout are failures and pay the penalty.
pub fn run_trial(
    grid: &OccupancyGrid,
    cspace: &OccupancyGrid,
    start: Cell,
    goal: Cell,
    config: &PlannerConfig,
    timeout_s: f64,
) -> Result<TrialResult> {
    let path = astar(cspace, start, goal)?;
    let world = World::new(grid, config.robot_radius_m);
    simulate(&world, &path, config, timeout_s, None)
}

/// Drives an already planned path. `trace`, when given, receives the state
/// after every control step.
pub fn simulate(
    world: &World,
    path: &Path,
    config: &PlannerConfig,
    timeout_s: f64,
    mut trace: Option<&mut Vec<TraceStep>>,
) -> Result<TrialResult> {
    config.validate()?;
    if !(timeout_s > 0.0) {
        return Err(Error::Config(format!("timeout {timeout_s} must be positive")));
    }
    let path_length = path_length_m(path);
    if path_length <= 0.0 {
        return Err(Error::Config("reference path has zero length".into()));
    }
    let global = GlobalPath::new(world, path);
    let (sx, sy) = world.cell_center(path.start());
    let aim = global.local_goal(sx, sy, 0.2);
    let mut state = RobotState::at_rest(sx, sy, (aim.1 - sy).atan2(aim.0 - sx));
    let goal = global.goal();
    let mut rng = seed::rng(config.seed);

    let dt = config.control_period_s;
    let sub_dt = dt / config.substeps as f64;
    let window = (config.stall_window_s / dt).round() as usize;
    let mut history = vec![(state.x, state.y)];
    let finish = |outcome: Outcome, elapsed: f64| {
        let success = outcome == Outcome::Success;
        let traversal_time = if success { elapsed } else { elapsed + FAILURE_PENALTY_S };
        TrialResult { success, outcome, traversal_time, path_length, normalized_time: traversal_time / path_length }
    };

    if world.collides(state.x, state.y) {
        return Ok(finish(Outcome::Collision, 0.0));
    }
    let mut step = 0usize;
    loop {
        let t = step as f64 * dt;
        if t >= timeout_s - 1e-9 {
            return Ok(finish(Outcome::Timeout, t));
        }
        let (cv, cw) = dwa_step(world, &state, &global, config, &mut rng);
        let v = clamp_toward(state.v, cv, config.acc_lin * dt, config.v_max);
        let w = clamp_toward(state.w, cw, config.acc_ang * dt, config.w_max);
        for k in 1..=config.substeps {
            state = state.advance(v, w, sub_dt);
            let elapsed = t + k as f64 * sub_dt;
            if world.collides(state.x, state.y) {
                return Ok(finish(Outcome::Collision, elapsed));
            }
            if (goal.0 - state.x).hypot(goal.1 - state.y) <= config.goal_tolerance_m {
                return Ok(finish(Outcome::Success, elapsed));
            }
        }
        step += 1;
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(TraceStep { time: step as f64 * dt, state });
        }
        history.push((state.x, state.y));
        if history.len() > window {
            let (ox, oy) = history[history.len() - 1 - window];
            if (state.x - ox).hypot(state.y - oy) < config.stall_distance_m {
                return Ok(finish(Outcome::Stall, step as f64 * dt));
            }
        }
    }
}

/// Mean and population variance of normalized time over `n_trials` runs
/// seeded `base_seed + 0 .. base_seed + n_trials - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub mean: f64,
    pub variance: f64,
    pub seeds: Vec<u64>,
    pub trials: Vec<TrialResult>,
}

pub fn benchmark_env(
    world: &World,
    path: &Path,
    n_trials: usize,
    config: &PlannerConfig,
    base_seed: u64,
    timeout_s: f64,
) -> Result<Benchmark> {
    if n_trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let seeds: Vec<u64> = (0..n_trials as u64).map(|i| base_seed.wrapping_add(i)).collect();
    let trials = seeds
        .iter()
        .map(|&s| simulate(world, path, &config.with_seed(s), timeout_s, None))
        .collect::<Result<Vec<_>>>()?;
    let norm: Vec<f64> = trials.iter().map(|t| t.normalized_time).collect();
    Ok(Benchmark { mean: crate::stats::mean(&norm), variance: crate::stats::variance(&norm), seeds, trials })
}

pub const TRIAL_CSV_HEADER: &str = "env_id,trial,seed,success,time_s,path_m,norm_s_per_m";

pub fn trial_csv_row(env_id: &str, trial: usize, seed: u64, r: &TrialResult) -> String {
    format!(
        "{env_id},{trial},{seed},{},{},{},{}",
        r.success, r.traversal_time, r.path_length, r.normalized_time
    )
}
