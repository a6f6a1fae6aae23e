//! The five geometric difficulty metrics, computed on a configuration space
//! along a planned path, and their z-normalization.
//!
//! Two ray counting rules coexist:
//!
//! * *visibility distance*: free cells passed plus the blocking step, so a
//!   ray that is blocked right away has length 1;
//! * *free run*: free cells passed only, so the same ray has length 0.
//!
//! Average visibility uses the first, characteristic dimension the second.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fan_direction, Cell, OccupancyGrid, NO_OBSTACLE};
use crate::planner::Path;

/// Rays in the dispersion scan; axes for characteristic dimension are pairs
/// of opposite rays from this fan.
pub const SCAN_RAYS: usize = 16;
pub const DEFAULT_MAX_RANGE: usize = 10;

pub const METRIC_NAMES: [&str; 5] = [
    "distance_to_closest_obstacle",
    "average_visibility",
    "dispersion",
    "characteristic_dimension",
    "tortuosity",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub distance_to_closest_obstacle: f64,
    pub average_visibility: f64,
    pub dispersion: f64,
    pub characteristic_dimension: f64,
    pub tortuosity: f64,
}

impl MetricVector {
    pub fn to_array(&self) -> [f64; 5] {
        [
            self.distance_to_closest_obstacle,
            self.average_visibility,
            self.dispersion,
            self.characteristic_dimension,
            self.tortuosity,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            distance_to_closest_obstacle: a[0],
            average_visibility: a[1],
            dispersion: a[2],
            characteristic_dimension: a[3],
            tortuosity: a[4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatsPreset {
    /// Published reference population constants.
    Table2,
    /// Recomputed over a generated dataset.
    Dataset,
}

impl StatsPreset {
    pub fn name(self) -> &'static str {
        match self {
            StatsPreset::Table2 => "table2",
            StatsPreset::Dataset => "dataset",
        }
    }
}

impl std::str::FromStr for StatsPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table2" => Ok(StatsPreset::Table2),
            "dataset" => Ok(StatsPreset::Dataset),
            other => Err(Error::Config(format!("unknown stats preset {other:?}"))),
        }
    }
}

/// Per-metric mean and standard deviation, in [`METRIC_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub preset: StatsPreset,
    pub mean: [f64; 5],
    pub std: [f64; 5],
}

impl MetricStats {
    pub fn table2() -> Self {
        Self {
            preset: StatsPreset::Table2,
            mean: [2.37, 4.42, 4.35, 4.05, 1.21],
            std: [0.93, 1.64, 0.89, 2.66, 0.14],
        }
    }

    /// Population mean and standard deviation over `vectors`.
    pub fn from_population(vectors: &[MetricVector]) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Config("cannot compute statistics of an empty population".into()));
        }
        let n = vectors.len() as f64;
        let mut mean = [0.0; 5];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(v.to_array()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = [0.0; 5];
        for v in vectors {
            for ((s, x), m) in std.iter_mut().zip(v.to_array()).zip(mean) {
                *s += (x - m).powi(2);
            }
        }
        std.iter_mut().for_each(|s| *s = (*s / n).sqrt());
        let stats = Self { preset: StatsPreset::Dataset, mean, std };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, s) in METRIC_NAMES.iter().zip(self.std) {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("standard deviation of {name} is {s}, must be positive")));
            }
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("metric means"));
        }
        Ok(())
    }
}

/// Per-component z-scores.
pub fn normalize(v: &MetricVector, stats: &MetricStats) -> Result<[f64; 5]> {
    stats.validate()?;
    let a = v.to_array();
    Ok(std::array::from_fn(|i| (a[i] - stats.mean[i]) / stats.std[i]))
}

pub fn denormalize(z: &[f64; 5], stats: &MetricStats) -> MetricVector {
    MetricVector::from_array(std::array::from_fn(|i| z[i] * stats.std[i] + stats.mean[i]))
}

fn check_path(cspace: &OccupancyGrid, path: &Path) -> Result<()> {
    if path.cells.is_empty() {
        return Err(Error::EmptyPath);
    }
    for &c in &path.cells {
        cspace.check_bounds(c)?;
        if cspace.is_occupied(c) {
            return Err(Error::OccupiedPathCell(c));
        }
    }
    Ok(())
}

fn path_mean(path: &Path, per_cell: impl Fn(Cell) -> f64) -> f64 {
    path.cells.iter().map(|&c| per_cell(c)).sum::<f64>() / path.cells.len() as f64
}

fn free_run(cspace: &OccupancyGrid, cell: Cell, ray: usize, max_steps: Option<usize>) -> usize {
    cspace.cast_ray_unchecked(cell, fan_direction(ray, SCAN_RAYS), max_steps)
}

/// Mean over the path of the distance (cells) to the nearest occupied cell.
pub fn avg_distance_to_obstacle(cspace: &OccupancyGrid, path: &Path) -> Result<f64> {
    check_path(cspace, path)?;
    let dt = cspace.distance_transform();
    let d = path_mean(path, |c| dt[cspace.index(c)]);
    if d == NO_OBSTACLE {
        return Err(Error::NoObstacle);
    }
    Ok(d)
}

/// Mean visibility distance over the 4 cardinal and 4 diagonal rays.
pub fn cell_visibility(cspace: &OccupancyGrid, cell: Cell) -> f64 {
    let total: usize = (0..SCAN_RAYS).step_by(2).map(|r| free_run(cspace, cell, r, None) + 1).sum();
    total as f64 / 8.0
}

pub fn avg_visibility(cspace: &OccupancyGrid, path: &Path) -> Result<f64> {
    check_path(cspace, path)?;
    Ok(path_mean(path, |c| cell_visibility(cspace, c)))
}

/// Blocked/open alternations around the 16-ray scan, counted cyclically. A
/// ray is blocked when it meets an obstacle (or the world edge) within
/// `max_range` cells.
pub fn cell_dispersion(cspace: &OccupancyGrid, cell: Cell, max_range: usize) -> usize {
    let blocked: [bool; SCAN_RAYS] = std::array::from_fn(|r| free_run(cspace, cell, r, Some(max_range)) < max_range);
    (0..SCAN_RAYS).filter(|&r| blocked[r] != blocked[(r + 1) % SCAN_RAYS]).count()
}

pub fn dispersion(cspace: &OccupancyGrid, path: &Path, max_range: usize) -> Result<f64> {
    if max_range == 0 {
        return Err(Error::Config("dispersion max range must be at least 1".into()));
    }
    check_path(cspace, path)?;
    Ok(path_mean(path, |c| cell_dispersion(cspace, c, max_range) as f64))
}

/// Smallest free run summed over the two halves of each of the 8 axes.
pub fn cell_characteristic_dimension(cspace: &OccupancyGrid, cell: Cell) -> usize {
    let half = SCAN_RAYS / 2;
    (0..half)
        .map(|a| free_run(cspace, cell, a, None) + free_run(cspace, cell, a + half, None))
        .min()
        .expect("eight axes")
}

pub fn characteristic_dimension(cspace: &OccupancyGrid, path: &Path) -> Result<f64> {
    check_path(cspace, path)?;
    Ok(path_mean(path, |c| cell_characteristic_dimension(cspace, c) as f64))
}

/// Arc length over chord length.
pub fn tortuosity(path: &Path) -> Result<f64> {
    if path.cells.is_empty() {
        return Err(Error::EmptyPath);
    }
    let (s, g) = (path.start(), path.goal());
    if s == g {
        return Err(Error::UndefinedChord);
    }
    let chord = (s.x as f64 - g.x as f64).hypot(s.y as f64 - g.y as f64);
    Ok(path.cost() / chord)
}

pub fn compute_all(cspace: &OccupancyGrid, path: &Path, max_range: usize) -> Result<MetricVector> {
    Ok(MetricVector {
        distance_to_closest_obstacle: avg_distance_to_obstacle(cspace, path)?,
        average_visibility: avg_visibility(cspace, path)?,
        dispersion: dispersion(cspace, path, max_range)?,
        characteristic_dimension: characteristic_dimension(cspace, path)?,
        tortuosity: tortuosity(path)?,
    })
}

/// What gets written next to each environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub raw: MetricVector,
    pub normalized: [f64; 5],
    pub stats_preset: StatsPreset,
    pub stats: MetricStats,
    pub max_range: usize,
}

impl MetricsReport {
    pub fn new(raw: MetricVector, stats: &MetricStats, max_range: usize) -> Result<Self> {
        Ok(Self { raw, normalized: normalize(&raw, stats)?, stats_preset: stats.preset, stats: *stats, max_range })
    }
}
