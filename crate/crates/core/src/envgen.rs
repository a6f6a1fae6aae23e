//! Cellular-automaton obstacle fields.
//!
//! A grid is filled at random and then smoothed: a cell with at least
//! `fill_threshold` occupied Moore neighbors is filled, a cell with at most
//! `clear_threshold` is cleared. Cells are updated in place in raster order,
//! so later cells in a pass see the updates made earlier in the same pass.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cell, OccupancyGrid};
use crate::seed;

/// Moore neighborhood size; fixed.
pub const NEIGHBORHOOD: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutomatonParams {
    pub initial_fill_percentage: f64,
    pub smoothing_iterations: usize,
    pub fill_threshold: usize,
    pub clear_threshold: usize,
    pub seed: u64,
}

impl AutomatonParams {
    pub fn new(initial_fill_percentage: f64, smoothing_iterations: usize, seed: u64) -> Self {
        Self { initial_fill_percentage, smoothing_iterations, fill_threshold: 5, clear_threshold: 1, seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.initial_fill_percentage;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("initial fill percentage {p} outside [0, 1]")));
        }
        if self.fill_threshold > NEIGHBORHOOD || self.clear_threshold > NEIGHBORHOOD {
            return Err(Error::Config(format!(
                "thresholds ({}, {}) must lie in [0, {NEIGHBORHOOD}]",
                self.fill_threshold, self.clear_threshold
            )));
        }
        if self.clear_threshold >= self.fill_threshold {
            return Err(Error::Config(format!(
                "clear threshold {} must be below fill threshold {}",
                self.clear_threshold, self.fill_threshold
            )));
        }
        Ok(())
    }
}

/// Independently occupies each cell with the configured probability. Draws
/// exactly `width * height` uniforms, in row-major order.
pub fn random_fill(width: usize, height: usize, resolution: f64, params: &AutomatonParams) -> Result<OccupancyGrid> {
    params.validate()?;
    let mut rng = seed::rng(params.seed);
    let p = params.initial_fill_percentage;
    let cells = (0..width * height).map(|_| rng.gen::<f64>() < p).collect();
    OccupancyGrid::from_cells(width, height, cells, resolution)
}

/// One in-place raster-order smoothing pass.
pub fn smooth_step(grid: &mut OccupancyGrid, params: &AutomatonParams) -> Result<()> {
    params.validate()?;
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            let cell = Cell::new(x, y);
            let filled = grid.filled_neighbors_unchecked(cell);
            if filled >= params.fill_threshold {
                grid.set(cell, true);
            }
            if filled <= params.clear_threshold {
                grid.set(cell, false);
            }
        }
    }
    Ok(())
}

/// Random fill followed by `smoothing_iterations` smoothing passes.
pub fn generate(width: usize, height: usize, resolution: f64, params: &AutomatonParams) -> Result<OccupancyGrid> {
    let mut grid = random_fill(width, height, resolution, params)?;
    for _ in 0..params.smoothing_iterations {
        smooth_step(&mut grid, params)?;
    }
    Ok(grid)
}
