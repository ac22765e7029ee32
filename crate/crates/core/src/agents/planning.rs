//! Shortest paths and frontier search over map memories.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use thiserror::Error;

use crate::geom::{Cell, NEIGHBORS8};
use crate::mapmem::{GlobalMap, MapGeometry, Occ};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("no path")]
    NoPath,
    #[error("no frontier")]
    NoFrontier,
}

/// Which map cells a path may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Traversability {
    /// Navigable cells only.
    Known,
    /// Navigable or undiscovered cells.
    Optimistic,
}

impl Traversability {
    pub fn allows(self, occ: Occ) -> bool {
        match self {
            Traversability::Known => occ == Occ::Navigable,
            Traversability::Optimistic => occ != Occ::NonNavigable,
        }
    }
}

/// An 8-connected cell path, endpoints included, with its exact length.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub cells: Vec<Cell>,
    pub straight: u32,
    pub diagonal: u32,
    pub cost: f64,
}

#[derive(PartialEq)]
struct Entry {
    key: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) const NO_PARENT: u32 = u32::MAX;

/// Single-source search result over a map grid. Distances are in cells.
pub(crate) struct Search {
    pub size: usize,
    pub counts: Vec<(u32, u32)>,
    pub parent: Vec<u32>,
    pub dist: Vec<f64>,
}

impl Search {
    pub fn reached(&self, i: usize) -> bool {
        self.dist[i].is_finite()
    }

    pub fn path_to(&self, target: usize, cell_size: f64) -> Option<Path> {
        if !self.reached(target) {
            return None;
        }
        let mut cells = Vec::new();
        let mut i = target as u32;
        while i != NO_PARENT {
            let u = i as usize;
            cells.push(Cell::new((u % self.size) as i32, (u / self.size) as i32));
            i = self.parent[u];
        }
        cells.reverse();
        let (s, d) = self.counts[target];
        Some(Path {
            cells,
            straight: s,
            diagonal: d,
            cost: cell_size * (s as f64 + d as f64 * SQRT_2),
        })
    }
}

/// Dijkstra from `source` over cells for which `ok` holds, without corner
/// cutting. Stops at the first settled cell satisfying `stop` and returns it.
pub(crate) fn search(
    geometry: &MapGeometry,
    ok: &dyn Fn(usize) -> bool,
    source: Cell,
    stop: &dyn Fn(usize) -> bool,
) -> (Search, Option<usize>) {
    let n = geometry.size_cells;
    let mut s = Search {
        size: n,
        counts: vec![(u32::MAX, u32::MAX); n * n],
        parent: vec![NO_PARENT; n * n],
        dist: vec![f64::INFINITY; n * n],
    };
    let Some(src) = geometry.index(source) else {
        return (s, None);
    };
    if !ok(src) {
        return (s, None);
    }
    let mut done = vec![false; n * n];
    let mut heap = BinaryHeap::new();
    s.counts[src] = (0, 0);
    s.dist[src] = 0.0;
    heap.push(Entry { key: 0.0, index: src });
    while let Some(Entry { index, .. }) = heap.pop() {
        if done[index] {
            continue;
        }
        done[index] = true;
        if stop(index) {
            return (s, Some(index));
        }
        let cx = (index % n) as i32;
        let cy = (index / n) as i32;
        let (st, dg) = s.counts[index];
        for (dx, dy) in NEIGHBORS8 {
            let nx = cx + dx;
            let ny = cy + dy;
            if nx < 0 || ny < 0 || nx as usize >= n || ny as usize >= n {
                continue;
            }
            let ni = ny as usize * n + nx as usize;
            if done[ni] || !ok(ni) {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal && (!ok(cy as usize * n + nx as usize) || !ok(ny as usize * n + cx as usize)) {
                continue;
            }
            let cand = if diagonal { (st, dg + 1) } else { (st + 1, dg) };
            let key = cand.0 as f64 + cand.1 as f64 * SQRT_2;
            if key < s.dist[ni] {
                s.dist[ni] = key;
                s.counts[ni] = cand;
                s.parent[ni] = index as u32;
                heap.push(Entry { key, index: ni });
            }
        }
    }
    (s, None)
}

/// Shortest 8-connected path under `rule`.
pub fn plan_path(map: &GlobalMap, from: Cell, to: Cell, rule: Traversability) -> Result<Path, PlanError> {
    let g = map.geometry();
    let occ = map.occ_slice();
    let ok = |i: usize| rule.allows(occ[i]);
    let target = g.index(to).ok_or(PlanError::NoPath)?;
    if !ok(target) {
        return Err(PlanError::NoPath);
    }
    search(g, &ok, from, &|i| i == target)
        .0
        .path_to(target, g.cell_size)
        .ok_or(PlanError::NoPath)
}

/// True for a navigable cell with an undiscovered 8-neighbour inside the map.
pub(crate) fn is_frontier(map: &GlobalMap, cell: Cell) -> bool {
    if map.occ(cell) != Occ::Navigable {
        return false;
    }
    let g = map.geometry();
    NEIGHBORS8.iter().any(|&(dx, dy)| {
        let c = cell.offset(dx, dy);
        g.contains(c) && map.occ(c) == Occ::Undiscovered
    })
}

/// Nearest frontier cell by path cost under `rule`.
pub fn frontier_select(map: &GlobalMap, agent: Cell, rule: Traversability) -> Result<Cell, PlanError> {
    let g = map.geometry();
    let occ = map.occ_slice();
    let ok = |i: usize| rule.allows(occ[i]);
    let (_, hit) = search(g, &ok, agent, &|i| is_frontier(map, g.cell_at_index(i)));
    hit.map(|i| g.cell_at_index(i)).ok_or(PlanError::NoFrontier)
}
