//! Occupancy rasters and the geometric primitives the rest of the crate is
//! built on.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magic token on the first line of the text map format.
pub const MAP_MAGIC: &str = "BARN1";

/// Distance reported for every cell of a grid that holds no obstacle.
pub const NO_OBSTACLE: f64 = f64::INFINITY;

/// Column/row index into a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn chebyshev(self, other: Cell) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

impl From<(usize, usize)> for Cell {
    fn from((x, y): (usize, usize)) -> Self {
        Self { x, y }
    }
}

impl From<Cell> for (usize, usize) {
    fn from(c: Cell) -> Self {
        (c.x, c.y)
    }
}

/// A ray cast from the center of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Cell,
    direction: (f64, f64),
    pub max_steps: Option<usize>,
}

impl Ray {
    /// `direction` must have unit Euclidean norm (to within 1e-9).
    pub fn new(origin: Cell, direction: (f64, f64), max_steps: Option<usize>) -> Result<Self> {
        let norm = direction.0.hypot(direction.1);
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "ray direction ({}, {}) is not a unit vector",
                direction.0, direction.1
            )));
        }
        Ok(Self { origin, direction, max_steps })
    }

    /// Ray number `index` of a `count`-ray fan starting at angle 0.
    pub fn fan(origin: Cell, index: usize, count: usize, max_steps: Option<usize>) -> Self {
        Self { origin, direction: fan_direction(index, count), max_steps }
    }

    pub fn direction(&self) -> (f64, f64) {
        self.direction
    }
}

/// Unit direction of ray `index` out of `count` evenly spaced rays. Axis and
/// diagonal directions are snapped to exact values so those rays step
/// exactly from cell to cell.
pub fn fan_direction(index: usize, count: usize) -> (f64, f64) {
    let angle = 2.0 * PI * index as f64 / count as f64;
    let (c, s) = (angle.cos(), angle.sin());
    let snap = |v: f64| {
        if v.abs() < 1e-12 {
            0.0
        } else if (v.abs() - 1.0).abs() < 1e-12 {
            v.signum()
        } else {
            v
        }
    };
    if (c.abs() - s.abs()).abs() < 1e-12 {
        (FRAC_1_SQRT_2.copysign(c), FRAC_1_SQRT_2.copysign(s))
    } else {
        (snap(c), snap(s))
    }
}

/// Boolean obstacle raster, row-major, `true` = occupied.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cells: Vec<bool>,
    resolution: f64,
}

impl OccupancyGrid {
    /// An all-free grid.
    pub fn new(width: usize, height: usize, resolution: f64) -> Result<Self> {
        Self::from_cells(width, height, vec![false; width * height], resolution)
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<bool>, resolution: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!("grid dimensions {width}x{height} must be positive")));
        }
        if cells.len() != width * height {
            return Err(Error::Config(format!(
                "{} cells given for a {width}x{height} grid",
                cells.len()
            )));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::Config(format!("resolution {resolution} must be positive")));
        }
        Ok(Self { width, height, cells, resolution })
    }

    /// Builds a grid from rows of `'0'`/`'1'` (or `'.'`/`'#'`); row 0 is y = 0.
    pub fn from_rows<S: AsRef<str>>(rows: &[S], resolution: f64) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().chars().count());
        let mut cells = Vec::with_capacity(width * height);
        for (y, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.chars().count() != width {
                return Err(Error::Parse { line: y + 1, msg: "ragged row".into() });
            }
            for ch in row.chars() {
                cells.push(match ch {
                    '1' | '#' => true,
                    '0' | '.' => false,
                    other => {
                        return Err(Error::Parse { line: y + 1, msg: format!("unexpected character {other:?}") })
                    }
                });
            }
        }
        Self::from_cells(width, height, cells, resolution)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    /// Panics if `cell` is out of bounds.
    pub fn is_occupied(&self, cell: Cell) -> bool {
        assert!(self.in_bounds(cell), "cell {cell:?} out of bounds");
        self.cells[self.index(cell)]
    }

    /// Occupancy at signed coordinates; `None` outside the grid.
    pub fn get(&self, x: isize, y: isize) -> Option<bool> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(self.cells[y as usize * self.width + x as usize])
        }
    }

    pub fn set(&mut self, cell: Cell, occupied: bool) {
        let i = self.index(cell);
        self.cells[i] = occupied;
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn occupied_fraction(&self) -> f64 {
        self.occupied_count() as f64 / self.len() as f64
    }

    pub fn check_bounds(&self, cell: Cell) -> Result<()> {
        if self.in_bounds(cell) {
            Ok(())
        } else {
            Err(Error::OutOfBounds { cell, width: self.width, height: self.height })
        }
    }

    /// Occupied cells among the 8 Moore neighbors; outside counts as free.
    pub fn filled_neighbors(&self, cell: Cell) -> Result<usize> {
        self.check_bounds(cell)?;
        Ok(self.filled_neighbors_unchecked(cell))
    }

    pub(crate) fn filled_neighbors_unchecked(&self, cell: Cell) -> usize {
        let (x, y) = (cell.x as isize, cell.y as isize);
        let mut count = 0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                if (dx, dy) != (0, 0) && self.get(x + dx, y + dy) == Some(true) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Number of free cells the ray passes before it meets an occupied cell,
    /// leaves the grid, or runs out of `max_steps`.
    ///
    /// The ray starts at the origin cell's center and advances one cell along
    /// its dominant axis per step, so axis-aligned and diagonal rays visit
    /// exactly one new cell per step. Each visited cell is the one containing
    /// the stepped point.
    pub fn cast_ray(&self, ray: &Ray) -> Result<usize> {
        self.check_bounds(ray.origin)?;
        if self.is_occupied(ray.origin) {
            return Err(Error::InvalidOrigin(ray.origin));
        }
        Ok(self.cast_ray_unchecked(ray.origin, ray.direction, ray.max_steps))
    }

    pub(crate) fn cast_ray_unchecked(&self, origin: Cell, direction: (f64, f64), max_steps: Option<usize>) -> usize {
        let (dx, dy) = direction;
        let major = dx.abs().max(dy.abs());
        let (sx, sy) = (dx / major, dy / major);
        let (ox, oy) = (origin.x as f64 + 0.5, origin.y as f64 + 0.5);
        let limit = max_steps.unwrap_or(usize::MAX);
        let mut steps = 0;
        while steps < limit {
            let k = (steps + 1) as f64;
            let px = (ox + k * sx).floor() as isize;
            let py = (oy + k * sy).floor() as isize;
            match self.get(px, py) {
                Some(false) => steps += 1,
                _ => break,
            }
        }
        steps
    }

    /// Exact Euclidean distance (in cells, center to center) from every cell
    /// to the nearest occupied cell. Occupied cells map to 0; a grid without
    /// obstacles maps everywhere to [`NO_OBSTACLE`].
    pub fn distance_transform(&self) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        let mut sq: Vec<f64> = self.cells.iter().map(|&occ| if occ { 0.0 } else { NO_OBSTACLE }).collect();

        let mut column = vec![0.0; h];
        let mut out = vec![0.0; w.max(h)];
        let mut scratch = Scratch::new(w.max(h));
        for x in 0..w {
            for y in 0..h {
                column[y] = sq[y * w + x];
            }
            squared_edt_1d(&column, &mut out[..h], &mut scratch);
            for y in 0..h {
                sq[y * w + x] = out[y];
            }
        }
        for y in 0..h {
            let row = &mut sq[y * w..(y + 1) * w];
            squared_edt_1d(row, &mut out[..w], &mut scratch);
            row.copy_from_slice(&out[..w]);
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Serializes to the `BARN1` text format, optionally with one comment line
    /// after the header.
    pub fn to_map_text(&self, comment: Option<&str>) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height + 64);
        let _ = writeln!(s, "{MAP_MAGIC} {} {} {}", self.width, self.height, self.resolution);
        if let Some(c) = comment {
            let _ = writeln!(s, "# {c}");
        }
        for row in self.cells.chunks(self.width) {
            s.extend(row.iter().map(|&c| if c { '1' } else { '0' }));
            s.push('\n');
        }
        s
    }

    /// Parses the `BARN1` text format. Comment lines (`#`) are accepted only
    /// between the header and the first row.
    pub fn from_map_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != MAP_MAGIC {
            return Err(Error::Parse { line: 1, msg: format!("expected `{MAP_MAGIC} <width> <height> <resolution>`") });
        }
        let bad = |msg: &str| Error::Parse { line: 1, msg: msg.to_string() };
        let width: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
        let height: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
        let resolution: f64 = fields[3].parse().map_err(|_| bad("bad resolution"))?;

        let mut cells = Vec::with_capacity(width * height);
        let mut rows = 0;
        let mut in_preamble = true;
        for (i, line) in lines {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if in_preamble && line.starts_with('#') {
                continue;
            }
            in_preamble = false;
            if line.is_empty() && rows == height {
                continue;
            }
            if rows == height {
                return Err(Error::Parse { line: i + 1, msg: "more rows than the header declares".into() });
            }
            if line.len() != width {
                return Err(Error::Parse { line: i + 1, msg: format!("row has {} cells, expected {width}", line.len()) });
            }
            for ch in line.chars() {
                cells.push(match ch {
                    '1' => true,
                    '0' => false,
                    other => {
                        return Err(Error::Parse { line: i + 1, msg: format!("unexpected character {other:?}") })
                    }
                });
            }
            rows += 1;
        }
        if rows != height {
            return Err(Error::Parse { line: rows + 2, msg: format!("found {rows} rows, expected {height}") });
        }
        Self::from_cells(width, height, cells, resolution)
    }

    /// Binary PGM (P5, maxval 255): 0 = occupied, 255 = free.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.cells.iter().map(|&c| if c { 0u8 } else { 255u8 }));
        out
    }
}

struct Scratch {
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self { v: vec![0; n], z: vec![0.0; n + 1] }
    }
}

/// One-dimensional squared distance transform of a sampled function
/// (lower envelope of parabolas). Entries of `f` may be infinite.
fn squared_edt_1d(f: &[f64], d: &mut [f64], s: &mut Scratch) {
    let n = f.len();
    // Only finite samples contribute parabolas.
    let mut k: isize = -1;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            if k < 0 {
                k = 0;
                s.v[0] = q;
                s.z[0] = f64::NEG_INFINITY;
                s.z[1] = f64::INFINITY;
                break;
            }
            let p = s.v[k as usize];
            let pf = p as f64;
            let inter = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf);
            if inter <= s.z[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            s.v[k as usize] = q;
            s.z[k as usize] = inter;
            s.z[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        d.iter_mut().for_each(|x| *x = NO_OBSTACLE);
        return;
    }
    let mut j = 0;
    for (q, out) in d.iter_mut().enumerate() {
        let qf = q as f64;
        while s.z[j + 1] < qf {
            j += 1;
        }
        let p = s.v[j];
        let diff = qf - p as f64;
        *out = diff * diff + f[p];
    }
}
