//! Footprint inflation. The robot is reduced to a point by dilating every
//! obstacle with a centered square kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::OccupancyGrid;

/// Meters per cell at which the Jackal footprint spans exactly 5 cells.
pub const DEFAULT_RESOLUTION: f64 = 0.1016;

pub const JACKAL_LENGTH_M: f64 = 0.508;
pub const JACKAL_WIDTH_M: f64 = 0.430;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotFootprint {
    pub length_m: f64,
    pub width_m: f64,
    /// Side of the square inflation kernel, odd.
    pub cells: usize,
}

impl RobotFootprint {
    /// Kernel side is `ceil(max(length, width) / resolution)`, rounded up to
    /// the next odd number.
    pub fn for_resolution(length_m: f64, width_m: f64, resolution: f64) -> Result<Self> {
        if !(length_m > 0.0 && width_m > 0.0 && resolution > 0.0) {
            return Err(Error::Config("footprint dimensions and resolution must be positive".into()));
        }
        // Absorb representation error so 0.508 / 0.1016 gives 5, not 6.
        let mut cells = (length_m.max(width_m) / resolution - 1e-9).ceil().max(1.0) as usize;
        if cells % 2 == 0 {
            cells += 1;
        }
        Ok(Self { length_m, width_m, cells })
    }

    pub fn jackal(resolution: f64) -> Result<Self> {
        Self::for_resolution(JACKAL_LENGTH_M, JACKAL_WIDTH_M, resolution)
    }

    pub fn radius_cells(&self) -> usize {
        self.cells / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells == 0 || self.cells % 2 == 0 {
            return Err(Error::Config(format!("inflation kernel side {} must be odd", self.cells)));
        }
        Ok(())
    }
}

impl Default for RobotFootprint {
    fn default() -> Self {
        Self { length_m: JACKAL_LENGTH_M, width_m: JACKAL_WIDTH_M, cells: 5 }
    }
}

/// Square Minkowski dilation. Area outside the grid counts as free, so cells
/// on the border stay free unless an in-grid obstacle is within reach.
pub fn inflate(grid: &OccupancyGrid, footprint: &RobotFootprint) -> Result<OccupancyGrid> {
    footprint.validate()?;
    let r = footprint.radius_cells();
    let (w, h) = (grid.width(), grid.height());
    let src = grid.cells();

    // Separable: a square max-filter is a row pass followed by a column pass.
    let mut rows = vec![false; w * h];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            rows[y * w + x] = line[lo..=hi].iter().any(|&c| c);
        }
    }
    let mut out = vec![false; w * h];
    for x in 0..w {
        for y in 0..h {
            let lo = y.saturating_sub(r);
            let hi = (y + r).min(h - 1);
            out[y * w + x] = (lo..=hi).any(|yy| rows[yy * w + x]);
        }
    }
    OccupancyGrid::from_cells(w, h, out, grid.resolution())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use proptest::prelude::*;

    #[test]
    fn jackal_is_five_cells_at_default_resolution() {
        assert_eq!(RobotFootprint::jackal(DEFAULT_RESOLUTION).unwrap().cells, 5);
        // 0.508 / 0.1 = 5.08 -> 6 -> odd 7
        assert_eq!(RobotFootprint::jackal(0.1).unwrap().cells, 7);
        assert_eq!(RobotFootprint::jackal(1.0).unwrap().cells, 1);
    }

    #[test]
    fn single_cell_becomes_square() {
        let mut g = OccupancyGrid::new(21, 21, DEFAULT_RESOLUTION).unwrap();
        g.set(Cell::new(10, 10), true);
        let c = inflate(&g, &RobotFootprint::default()).unwrap();
        assert_eq!(c.occupied_count(), 25);
        for i in 0..c.len() {
            let cell = c.cell_at(i);
            assert_eq!(c.is_occupied(cell), cell.chebyshev(Cell::new(10, 10)) <= 2);
        }
    }

    #[test]
    fn empty_stays_empty_and_unit_kernel_is_identity() {
        let g = OccupancyGrid::new(7, 5, 0.1).unwrap();
        assert_eq!(inflate(&g, &RobotFootprint::default()).unwrap(), g);
        let g = OccupancyGrid::from_rows(&["0101", "1000", "0010"], 0.1).unwrap();
        let unit = RobotFootprint { cells: 1, ..RobotFootprint::default() };
        assert_eq!(inflate(&g, &unit).unwrap(), g);
    }

    #[test]
    fn even_kernel_rejected() {
        let g = OccupancyGrid::new(4, 4, 0.1).unwrap();
        let even = RobotFootprint { cells: 4, ..RobotFootprint::default() };
        assert!(matches!(inflate(&g, &even), Err(Error::Config(_))));
    }

    #[test]
    fn border_cells_can_stay_free() {
        let mut g = OccupancyGrid::new(10, 10, 0.1).unwrap();
        g.set(Cell::new(5, 5), true);
        let c = inflate(&g, &RobotFootprint::default()).unwrap();
        assert!(!c.is_occupied(Cell::new(0, 0)));
        assert!(!c.is_occupied(Cell::new(9, 5)));
    }

    fn arb_grid() -> impl Strategy<Value = OccupancyGrid> {
        (1usize..=20, 1usize..=20).prop_flat_map(|(w, h)| {
            proptest::collection::vec(proptest::bool::weighted(0.1), w * h)
                .prop_map(move |cells| OccupancyGrid::from_cells(w, h, cells, 0.1).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_union_of_stamps(g in arb_grid(), k in prop_oneof![Just(1usize), Just(3), Just(5), Just(7)]) {
            let fp = RobotFootprint { cells: k, ..RobotFootprint::default() };
            let out = inflate(&g, &fp).unwrap();
            let r = (k / 2) as isize;
            let mut stamped = vec![false; g.len()];
            for i in 0..g.len() {
                let o = g.cell_at(i);
                if !g.is_occupied(o) { continue; }
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (x, y) = (o.x as isize + dx, o.y as isize + dy);
                        if g.get(x, y).is_some() {
                            stamped[y as usize * g.width() + x as usize] = true;
                        }
                    }
                }
            }
            prop_assert_eq!(out.cells(), &stamped[..]);
            for i in 0..g.len() {
                let c = g.cell_at(i);
                if g.is_occupied(c) {
                    prop_assert!(out.is_occupied(c));
                }
                if !out.is_occupied(c) {
                    for j in 0..g.len() {
                        let o = g.cell_at(j);
                        if g.is_occupied(o) {
                            prop_assert!(c.chebyshev(o) > k / 2);
                        }
                    }
                }
            }
        }
    }
}
