//! Brute-force reference implementations shared by the integration tests and
//! the acceptance runner. Nothing here calls into the library's geometry.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::f64::consts::SQRT_2;

use barn_core::planner::Path;
use barn_core::{Cell, OccupancyGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_grid(rng: &mut impl Rng, w: usize, h: usize, p: f64) -> OccupancyGrid {
    let cells = (0..w * h).map(|_| rng.gen_bool(p)).collect();
    OccupancyGrid::from_cells(w, h, cells, 0.1).unwrap()
}

fn occupied(g: &OccupancyGrid, x: isize, y: isize) -> bool {
    x < 0 || y < 0 || x >= g.width() as isize || y >= g.height() as isize || g.cells()[y as usize * g.width() + x as usize]
}

pub fn free_cells(g: &OccupancyGrid) -> Vec<Cell> {
    (0..g.height())
        .flat_map(|y| (0..g.width()).map(move |x| Cell::new(x, y)))
        .filter(|c| !occupied(g, c.x as isize, c.y as isize))
        .collect()
}

const T: f64 = SQRT_2 - 1.0; // tan(22.5 deg)

/// Per-step displacement of scan ray `i` (22.5 degrees apart, counter-clockwise
/// from +x), normalized so the dominant axis moves one cell.
pub const SCAN_STEPS: [(f64, f64); 16] = [
    (1.0, 0.0),
    (1.0, T),
    (1.0, 1.0),
    (T, 1.0),
    (0.0, 1.0),
    (-T, 1.0),
    (-1.0, 1.0),
    (-1.0, T),
    (-1.0, 0.0),
    (-1.0, -T),
    (-1.0, -1.0),
    (-T, -1.0),
    (0.0, -1.0),
    (T, -1.0),
    (1.0, -1.0),
    (1.0, -T),
];

/// Free cells crossed from the center of `origin` along `step` before an
/// occupied or off-grid cell, at most `limit`.
pub fn walk_steps(g: &OccupancyGrid, origin: Cell, step: (f64, f64), limit: Option<usize>) -> usize {
    let mut n = 0;
    while limit.map_or(true, |l| n < l) {
        let k = (n + 1) as f64;
        let x = (origin.x as f64 + 0.5 + k * step.0).floor() as isize;
        let y = (origin.y as f64 + 0.5 + k * step.1).floor() as isize;
        if occupied(g, x, y) {
            break;
        }
        n += 1;
    }
    n
}

/// Same walk for an arbitrary unit direction.
pub fn walk_direction(g: &OccupancyGrid, origin: Cell, dir: (f64, f64), limit: Option<usize>) -> usize {
    let m = if dir.0.abs() >= dir.1.abs() { dir.0.abs() } else { dir.1.abs() };
    walk_steps(g, origin, (dir.0 / m, dir.1 / m), limit)
}

pub fn scan(g: &OccupancyGrid, c: Cell, i: usize, limit: Option<usize>) -> usize {
    walk_steps(g, c, SCAN_STEPS[i], limit)
}

pub fn nearest_obstacle(g: &OccupancyGrid, c: Cell) -> f64 {
    let mut best = f64::INFINITY;
    for y in 0..g.height() {
        for x in 0..g.width() {
            if g.cells()[y * g.width() + x] {
                let d = ((x as f64 - c.x as f64).powi(2) + (y as f64 - c.y as f64).powi(2)).sqrt();
                best = best.min(d);
            }
        }
    }
    best
}

pub fn visibility(g: &OccupancyGrid, c: Cell) -> f64 {
    [0, 2, 4, 6, 8, 10, 12, 14].iter().map(|&i| (scan(g, c, i, None) + 1) as f64).sum::<f64>() / 8.0
}

pub fn dispersion(g: &OccupancyGrid, c: Cell, max_range: usize) -> usize {
    let blocked: Vec<bool> = (0..16).map(|i| scan(g, c, i, Some(max_range)) < max_range).collect();
    let mut n = 0;
    for i in 0..16 {
        if blocked[i] != blocked[(i + 1) % 16] {
            n += 1;
        }
    }
    n
}

pub fn characteristic_dimension(g: &OccupancyGrid, c: Cell) -> usize {
    (0..8).map(|a| scan(g, c, a, None) + scan(g, c, a + 8, None)).min().unwrap()
}

pub fn tortuosity(cells: &[Cell]) -> f64 {
    let seg = |a: Cell, b: Cell| (a.x as f64 - b.x as f64).hypot(a.y as f64 - b.y as f64);
    let arc: f64 = cells.windows(2).map(|w| seg(w[0], w[1])).sum();
    arc / seg(cells[0], *cells.last().unwrap())
}

/// All five metrics in library order, averaged over `cells`.
pub fn metrics(g: &OccupancyGrid, cells: &[Cell], max_range: usize) -> [f64; 5] {
    let n = cells.len() as f64;
    let avg = |f: &dyn Fn(Cell) -> f64| cells.iter().map(|&c| f(c)).sum::<f64>() / n;
    [
        avg(&|c| nearest_obstacle(g, c)),
        avg(&|c| visibility(g, c)),
        avg(&|c| dispersion(g, c, max_range) as f64),
        avg(&|c| characteristic_dimension(g, c) as f64),
        tortuosity(cells),
    ]
}

/// Random 8-adjacent walk over free cells with distinct endpoints, or `None`
/// when the start cell is isolated.
pub fn random_walk(rng: &mut impl Rng, g: &OccupancyGrid, max_len: usize) -> Option<Vec<Cell>> {
    let free = free_cells(g);
    if free.is_empty() {
        return None;
    }
    let mut cells = vec![free[rng.gen_range(0..free.len())]];
    let target = rng.gen_range(2..=max_len.max(2));
    for _ in 0..4 * max_len {
        let c = *cells.last().unwrap();
        let next: Vec<Cell> = neighbors8(g, c).collect();
        if next.is_empty() {
            return None;
        }
        cells.push(next[rng.gen_range(0..next.len())]);
        if cells.len() >= target && cells.last() != cells.first() {
            return Some(cells);
        }
    }
    None
}

fn neighbors8(g: &OccupancyGrid, c: Cell) -> impl Iterator<Item = Cell> + '_ {
    let (x, y) = (c.x as isize, c.y as isize);
    (-1..=1isize)
        .flat_map(move |dy| (-1..=1isize).map(move |dx| (dx, dy)))
        .filter(|&d| d != (0, 0))
        .filter(move |&(dx, dy)| !occupied(g, x + dx, y + dy))
        .map(move |(dx, dy)| Cell::new((x + dx) as usize, (y + dy) as usize))
}

/// Legal moves: any free 8-neighbor, except diagonals whose two flanking
/// cardinal cells are both blocked.
pub fn legal_moves(g: &OccupancyGrid, c: Cell) -> Vec<(Cell, bool)> {
    let (x, y) = (c.x as isize, c.y as isize);
    let mut out = Vec::new();
    for dy in -1..=1isize {
        for dx in -1..=1isize {
            if (dx, dy) == (0, 0) || occupied(g, x + dx, y + dy) {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal && occupied(g, x + dx, y) && occupied(g, x, y + dy) {
                continue;
            }
            out.push((Cell::new((x + dx) as usize, (y + dy) as usize), diagonal));
        }
    }
    out
}

/// Optimal (cardinal, diagonal) step counts by Dijkstra. A cost
/// `a + b*sqrt(2)` determines `(a, b)` uniquely, so equal costs mean equal
/// counts.
pub fn dijkstra(g: &OccupancyGrid, start: Cell, goal: Cell) -> Option<(usize, usize)> {
    let idx = |c: Cell| c.y * g.width() + c.x;
    let cost = |(a, b): (usize, usize)| a as f64 + b as f64 * SQRT_2;
    let mut best: Vec<Option<(usize, usize)>> = vec![None; g.width() * g.height()];
    let mut heap = BinaryHeap::new();
    best[idx(start)] = Some((0, 0));
    heap.push(Reverse((Key(0.0), idx(start), 0usize, 0usize)));
    while let Some(Reverse((Key(k), i, a, b))) = heap.pop() {
        if best[i].map_or(false, |p| cost(p) < k) {
            continue;
        }
        let c = Cell::new(i % g.width(), i / g.width());
        if c == goal {
            return Some((a, b));
        }
        for (n, diagonal) in legal_moves(g, c) {
            let next = if diagonal { (a, b + 1) } else { (a + 1, b) };
            let j = idx(n);
            if best[j].map_or(true, |p| cost(next) < cost(p) - 1e-12) {
                best[j] = Some(next);
                heap.push(Reverse((Key(cost(next)), j, next.0, next.1)));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Key(f64);
impl Eq for Key {}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub fn bfs_reachable(g: &OccupancyGrid, start: Cell) -> Vec<bool> {
    let mut seen = vec![false; g.width() * g.height()];
    seen[start.y * g.width() + start.x] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for (n, _) in legal_moves(g, c) {
            let j = n.y * g.width() + n.x;
            if !seen[j] {
                seen[j] = true;
                queue.push_back(n);
            }
        }
    }
    seen
}

pub fn path(cells: Vec<Cell>, resolution: f64) -> Path {
    Path { cells, resolution }
}
