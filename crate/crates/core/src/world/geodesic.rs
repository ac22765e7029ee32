//! Geodesic distances on the 8-connected cell graph.
//!
//! Nodes are cells that are free and whose centre keeps a clearance of
//! `agent_radius - resolution * sqrt(2) / 2` from occupied cells. With that
//! clearance the containing cell of every navigable agent position is a node.
//! Diagonal moves may not cut occupied corners. Path lengths are tracked as
//! exact `(straight, diagonal)` step counts so identical paths always produce
//! bit-identical lengths regardless of search direction.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use super::{GridWorld, WorldError};
use crate::geom::{Cell, Point, NEIGHBORS8};

/// Length of a path made of `straight` axis steps and `diagonal` diagonal
/// steps on a grid of the given resolution.
pub fn distance_from_counts(straight: u32, diagonal: u32, resolution: f64) -> f64 {
    resolution * (straight as f64 + diagonal as f64 * SQRT_2)
}

const UNREACHED: (u32, u32) = (u32::MAX, u32::MAX);

/// Geodesic distance from every node cell to a fixed target.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    resolution: f64,
    counts: Vec<(u32, u32)>,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Distance at a cell; infinite for non-nodes, unreachable or
    /// out-of-bounds cells.
    pub fn at_cell(&self, cell: Cell) -> f64 {
        if cell.x < 0 || cell.y < 0 || cell.x as usize >= self.width || cell.y as usize >= self.height {
            return f64::INFINITY;
        }
        self.values[cell.y as usize * self.width + cell.x as usize]
    }

    /// Distance from an arbitrary point: the best of the containing cell and
    /// its neighbours, each charged the straight-line offset to its centre.
    /// At cell centres this equals [`DistanceField::at_cell`].
    pub fn at_point(&self, p: Point) -> f64 {
        let home = crate::geom::cell_of(p, Point::new(0.0, 0.0), self.resolution);
        if self.at_cell(home).is_infinite() {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let c = home.offset(dx, dy);
                let v = self.at_cell(c);
                if v.is_finite() {
                    let centre = Point::new(
                        (c.x as f64 + 0.5) * self.resolution,
                        (c.y as f64 + 0.5) * self.resolution,
                    );
                    best = best.min(v + p.distance(centre));
                }
            }
        }
        best
    }

    /// Exact step counts at a cell, if reached.
    pub fn counts(&self, cell: Cell) -> Option<(u32, u32)> {
        if self.at_cell(cell).is_infinite() {
            return None;
        }
        Some(self.counts[cell.y as usize * self.width + cell.x as usize])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Node mask for a given agent radius.
pub(crate) fn node_mask(world: &GridWorld, agent_radius: f64) -> Vec<bool> {
    let clearance = agent_radius - world.resolution() * SQRT_2 / 2.0;
    let mut mask = vec![false; world.width() * world.height()];
    for y in 0..world.height() as i32 {
        for x in 0..world.width() as i32 {
            let cell = Cell::new(x, y);
            if world.is_occupied(cell) {
                continue;
            }
            let ok = if clearance > 0.0 {
                let c = world.cell_center(cell);
                world.is_navigable(c.x, c.y, clearance)
            } else {
                true
            };
            mask[y as usize * world.width() + x as usize] = ok;
        }
    }
    mask
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

fn check_point(world: &GridWorld, p: Point, agent_radius: f64) -> Result<Cell, WorldError> {
    if !world.is_navigable(p.x, p.y, agent_radius) {
        return Err(WorldError::InvalidPoint { x: p.x, y: p.y });
    }
    Ok(world.cell_at(p))
}

/// Single-source Dijkstra over the node graph, returning per-cell counts.
pub(crate) fn dijkstra_counts(world: &GridWorld, mask: &[bool], source: Cell) -> Vec<(u32, u32)> {
    let w = world.width();
    let h = world.height();
    let mut counts = vec![UNREACHED; w * h];
    let Some(src) = world.index(source) else {
        return counts;
    };
    if !mask[src] {
        return counts;
    }
    let mut done = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    counts[src] = (0, 0);
    heap.push(Entry { key: 0.0, index: src });
    while let Some(Entry { index, .. }) = heap.pop() {
        if done[index] {
            continue;
        }
        done[index] = true;
        let cx = (index % w) as i32;
        let cy = (index / w) as i32;
        let (s, d) = counts[index];
        for (dx, dy) in NEIGHBORS8 {
            let nx = cx + dx;
            let ny = cy + dy;
            if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                continue;
            }
            let ni = ny as usize * w + nx as usize;
            if !mask[ni] || done[ni] {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal {
                let a = cy as usize * w + nx as usize;
                let b = ny as usize * w + cx as usize;
                if !mask[a] || !mask[b] {
                    continue;
                }
            }
            let cand = if diagonal { (s, d + 1) } else { (s + 1, d) };
            let cand_key = cand.0 as f64 + cand.1 as f64 * SQRT_2;
            let cur = counts[ni];
            let cur_key = if cur == UNREACHED {
                f64::INFINITY
            } else {
                cur.0 as f64 + cur.1 as f64 * SQRT_2
            };
            if cand_key < cur_key {
                counts[ni] = cand;
                heap.push(Entry {
                    key: cand_key,
                    index: ni,
                });
            }
        }
    }
    counts
}

/// Distance field to `target` for an agent of `agent_radius`.
pub fn geodesic_field(world: &GridWorld, target: Point, agent_radius: f64) -> Result<DistanceField, WorldError> {
    let source = check_point(world, target, agent_radius)?;
    let owned;
    let mask: &[bool] = if agent_radius == super::AGENT_RADIUS {
        world.default_node_mask()
    } else {
        owned = node_mask(world, agent_radius);
        &owned
    };
    let counts = dijkstra_counts(world, mask, source);
    let res = world.resolution();
    let values = counts
        .iter()
        .map(|&(s, d)| {
            if (s, d) == UNREACHED {
                f64::INFINITY
            } else {
                distance_from_counts(s, d, res)
            }
        })
        .collect();
    Ok(DistanceField {
        width: world.width(),
        height: world.height(),
        resolution: res,
        counts,
        values,
    })
}

/// Shortest 8-connected path length between the cells containing `a` and `b`.
pub fn geodesic_distance(world: &GridWorld, a: Point, b: Point, agent_radius: f64) -> Result<f64, WorldError> {
    let ca = check_point(world, a, agent_radius)?;
    let cb = check_point(world, b, agent_radius)?;
    if ca == cb {
        return Ok(0.0);
    }
    let owned;
    let mask: &[bool] = if agent_radius == super::AGENT_RADIUS {
        world.default_node_mask()
    } else {
        owned = node_mask(world, agent_radius);
        &owned
    };
    let counts = dijkstra_counts(world, mask, cb);
    match counts[world.index(ca).expect("checked in bounds")] {
        UNREACHED => Err(WorldError::Unreachable),
        (s, d) => Ok(distance_from_counts(s, d, world.resolution())),
    }
}
