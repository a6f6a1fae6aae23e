//! Endpoint selection, connectivity and reference-path planning on a
//! configuration space.
//!
//! Moves are 8-connected. A diagonal move is refused when both cardinal cells
//! it squeezes between are occupied; flood fill and A* share this rule, so a
//! connected pair always has a path.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::f64::consts::SQRT_2;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cell, OccupancyGrid};
use crate::seed;

const OFFSETS: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Free neighbors reachable in one move, with whether the move is diagonal.
pub fn moves(grid: &OccupancyGrid, cell: Cell) -> impl Iterator<Item = (Cell, bool)> + '_ {
    let (x, y) = (cell.x as isize, cell.y as isize);
    OFFSETS.iter().filter_map(move |&(dx, dy)| {
        if grid.get(x + dx, y + dy) != Some(false) {
            return None;
        }
        let diagonal = dx != 0 && dy != 0;
        if diagonal && grid.get(x + dx, y) != Some(false) && grid.get(x, y + dy) != Some(false) {
            return None;
        }
        Some((Cell::new((x + dx) as usize, (y + dy) as usize), diagonal))
    })
}

/// Ordered 8-adjacent free cells from start to goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub cells: Vec<Cell>,
    pub resolution: f64,
}

impl Path {
    pub fn start(&self) -> Cell {
        self.cells[0]
    }

    pub fn goal(&self) -> Cell {
        *self.cells.last().expect("path is never empty")
    }

    /// (cardinal steps, diagonal steps).
    pub fn step_counts(&self) -> (usize, usize) {
        self.cells.windows(2).fold((0, 0), |(c, d), w| {
            if w[0].x != w[1].x && w[0].y != w[1].y {
                (c, d + 1)
            } else {
                (c + 1, d)
            }
        })
    }

    /// Arc length in cells.
    pub fn cost(&self) -> f64 {
        let (c, d) = self.step_counts();
        step_cost(c, d)
    }

    pub fn length_m(&self) -> f64 {
        path_length_m(self)
    }

    /// Checks adjacency, freeness and non-emptiness against `cspace`.
    pub fn validate(&self, cspace: &OccupancyGrid) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::EmptyPath);
        }
        for &c in &self.cells {
            cspace.check_bounds(c)?;
            if cspace.is_occupied(c) {
                return Err(Error::OccupiedPathCell(c));
            }
        }
        for w in self.cells.windows(2) {
            if w[0].chebyshev(w[1]) != 1 {
                return Err(Error::Config(format!("path cells {:?} and {:?} are not adjacent", w[0], w[1])));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("path serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `cardinal + diagonal * sqrt(2)`, always evaluated the same way so equal
/// step counts give bit-identical costs.
pub fn step_cost(cardinal: usize, diagonal: usize) -> f64 {
    cardinal as f64 + diagonal as f64 * SQRT_2
}

pub fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.x.abs_diff(b.x);
    let dy = a.y.abs_diff(b.y);
    step_cost(dx.max(dy) - dx.min(dy), dx.min(dy))
}

/// Start uniformly among free cells of column 0, goal uniformly among free
/// cells of the last column.
pub fn select_endpoints(cspace: &OccupancyGrid, rng_seed: u64) -> Result<(Cell, Cell)> {
    let column = |x: usize| -> Vec<Cell> {
        (0..cspace.height()).map(|y| Cell::new(x, y)).filter(|&c| !cspace.is_occupied(c)).collect()
    };
    let left = column(0);
    if left.is_empty() {
        return Err(Error::NoEndpoint("left"));
    }
    let right = column(cspace.width() - 1);
    if right.is_empty() {
        return Err(Error::NoEndpoint("right"));
    }
    let mut rng = seed::rng(rng_seed);
    let start = left[rng.gen_range(0..left.len())];
    let goal = right[rng.gen_range(0..right.len())];
    Ok((start, goal))
}

fn check_endpoint(cspace: &OccupancyGrid, c: Cell) -> Result<()> {
    cspace.check_bounds(c)?;
    if cspace.is_occupied(c) {
        return Err(Error::InvalidEndpoint(c));
    }
    Ok(())
}

/// Flood fill from `start`; true when `goal` is reached.
pub fn is_connected(cspace: &OccupancyGrid, start: Cell, goal: Cell) -> Result<bool> {
    check_endpoint(cspace, start)?;
    check_endpoint(cspace, goal)?;
    let mut seen = vec![false; cspace.len()];
    let mut stack = vec![start];
    seen[cspace.index(start)] = true;
    while let Some(c) = stack.pop() {
        if c == goal {
            return Ok(true);
        }
        for (n, _) in moves(cspace, c) {
            let i = cspace.index(n);
            if !seen[i] {
                seen[i] = true;
                stack.push(n);
            }
        }
    }
    Ok(false)
}

/// Cells reachable from `start` (breadth-first), as a mask.
pub fn reachable(cspace: &OccupancyGrid, start: Cell) -> Vec<bool> {
    let mut seen = vec![false; cspace.len()];
    if !cspace.in_bounds(start) || cspace.is_occupied(start) {
        return seen;
    }
    let mut queue = VecDeque::from([start]);
    seen[cspace.index(start)] = true;
    while let Some(c) = queue.pop_front() {
        for (n, _) in moves(cspace, c) {
            let i = cspace.index(n);
            if !seen[i] {
                seen[i] = true;
                queue.push_back(n);
            }
        }
    }
    seen
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    f: f64,
    h: f64,
    g: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed: BinaryHeap is a max-heap and we pop the smallest (f, h, index).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-cost 8-connected path (unit cardinal, sqrt(2) diagonal steps)
/// using the octile heuristic. Ties go to the lower heuristic, then to the
/// lower row-major index.
pub fn astar(cspace: &OccupancyGrid, start: Cell, goal: Cell) -> Result<Path> {
    check_endpoint(cspace, start)?;
    check_endpoint(cspace, goal)?;
    let n = cspace.len();
    // Step counts rather than running float sums keep costs order-independent.
    let mut best: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut open = BinaryHeap::new();

    let si = cspace.index(start);
    best[si] = Some((0, 0));
    let h0 = octile(start, goal);
    open.push(Entry { f: h0, h: h0, g: 0.0, index: si });

    while let Some(Entry { index, g, .. }) = open.pop() {
        let (gc, gd) = best[index].expect("queued cells have a cost");
        // Stale entry: the cell was improved after this was queued.
        if g > step_cost(gc, gd) {
            continue;
        }
        let cell = cspace.cell_at(index);
        if cell == goal {
            let mut cells = vec![cell];
            let mut i = index;
            while i != si {
                i = parent[i];
                cells.push(cspace.cell_at(i));
            }
            cells.reverse();
            return Ok(Path { cells, resolution: cspace.resolution() });
        }
        for (next, diagonal) in moves(cspace, cell) {
            let ni = cspace.index(next);
            let counts = if diagonal { (gc, gd + 1) } else { (gc + 1, gd) };
            let g = step_cost(counts.0, counts.1);
            if best[ni].is_some_and(|(c, d)| step_cost(c, d) <= g) {
                continue;
            }
            best[ni] = Some(counts);
            parent[ni] = index;
            let h = octile(next, goal);
            open.push(Entry { f: g + h, h, g, index: ni });
        }
    }
    Err(Error::NoPath { start, goal })
}

/// Sum of step lengths, in meters.
pub fn path_length_m(path: &Path) -> f64 {
    path.cost() * path.resolution
}
