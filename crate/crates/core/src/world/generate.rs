//! Procedural room-and-corridor worlds.
//!
//! Layouts are drawn on a coarse block lattice (one block = one wall
//! thickness) and then upsampled, so every wall is at least one block thick
//! and room/corridor boundaries land on block edges.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GridWorld, WorldError, DEFAULT_RESOLUTION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateParams {
    pub size_m: f64,
    pub corridor_width_m: f64,
    pub room_count: usize,
    pub resolution: f64,
    pub wall_thickness_m: f64,
}

impl Default for GenerateParams {
    fn default() -> Self {
        Self {
            size_m: 25.0,
            corridor_width_m: 1.6,
            room_count: 6,
            resolution: DEFAULT_RESOLUTION,
            wall_thickness_m: 0.8,
        }
    }
}

const MAX_ATTEMPTS: u64 = 32;

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl Rect {
    fn center(&self) -> (usize, usize) {
        ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)
    }

    /// Overlap test after growing `self` by `margin` blocks.
    fn touches(&self, other: &Rect, margin: usize) -> bool {
        self.x0 < other.x1 + margin
            && other.x0 < self.x1 + margin
            && self.y0 < other.y1 + margin
            && other.y0 < self.y1 + margin
    }
}

/// Generates a closed, connected world. Deterministic in `(seed, params)`.
pub fn generate_world(seed: u64, params: &GenerateParams) -> Result<GridWorld, WorldError> {
    if !(params.size_m >= 5.0) {
        return Err(WorldError::Generation(format!(
            "size_m must be >= 5, got {}",
            params.size_m
        )));
    }
    if !(params.resolution > 0.0) {
        return Err(WorldError::Generation("resolution must be > 0".into()));
    }
    if !(params.corridor_width_m >= 3.0 * params.resolution) {
        return Err(WorldError::Generation(format!(
            "corridor_width_m must be >= 3 x resolution ({} m)",
            3.0 * params.resolution
        )));
    }
    if params.room_count == 0 {
        return Err(WorldError::Generation("room_count must be >= 1".into()));
    }
    let block_cells = ((params.wall_thickness_m / params.resolution).round() as usize).max(1);
    let n = (params.size_m / params.resolution).round() as usize;
    let blocks = n / block_cells;
    if blocks < 5 {
        return Err(WorldError::Generation("world too small for its wall thickness".into()));
    }
    let block_m = block_cells as f64 * params.resolution;
    let corridor_blocks = ((params.corridor_width_m / block_m).round() as usize).max(1);

    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ attempt);
        if let Some(coarse) = layout(&mut rng, blocks, corridor_blocks, params.room_count, block_m) {
            let mut occupied = vec![true; n * n];
            for by in 0..blocks {
                for bx in 0..blocks {
                    if coarse[by * blocks + bx] {
                        continue;
                    }
                    for y in by * block_cells..(by + 1) * block_cells {
                        for x in bx * block_cells..(bx + 1) * block_cells {
                            occupied[y * n + x] = false;
                        }
                    }
                }
            }
            let world = GridWorld::from_occupancy(format!("gen-{seed}"), n, n, params.resolution, occupied)?;
            if free_components(&world) == 1 {
                return Ok(world);
            }
        }
    }
    Err(WorldError::Generation(format!(
        "could not place {} rooms after {MAX_ATTEMPTS} attempts",
        params.room_count
    )))
}

fn layout(rng: &mut ChaCha8Rng, blocks: usize, corridor: usize, room_count: usize, block_m: f64) -> Option<Vec<bool>> {
    // Interior block range is 1..blocks-1 (outer ring stays wall).
    let inner = blocks - 2;
    let min_side = ((3.0 / block_m).ceil() as usize).clamp(1, inner);
    let max_side = ((inner as f64 / 2.5) as usize).max(min_side);
    let mut rooms: Vec<Rect> = Vec::new();
    let mut tries = 0;
    while rooms.len() < room_count && tries < 400 {
        tries += 1;
        let w = rng.gen_range(min_side..=max_side);
        let h = rng.gen_range(min_side..=max_side);
        if w > inner || h > inner {
            continue;
        }
        let x0 = rng.gen_range(1..=blocks - 1 - w);
        let y0 = rng.gen_range(1..=blocks - 1 - h);
        let rect = Rect {
            x0,
            y0,
            x1: x0 + w,
            y1: y0 + h,
        };
        if rooms.iter().any(|r| r.touches(&rect, 1)) {
            continue;
        }
        rooms.push(rect);
    }
    if rooms.len() < room_count {
        return None;
    }
    let mut occ = vec![true; blocks * blocks];
    let mut carve = |x0: usize, y0: usize, x1: usize, y1: usize| {
        for y in y0.max(1)..y1.min(blocks - 1) {
            for x in x0.max(1)..x1.min(blocks - 1) {
                occ[y * blocks + x] = false;
            }
        }
    };
    for r in &rooms {
        carve(r.x0, r.y0, r.x1, r.y1);
    }
    for i in 1..rooms.len() {
        let (cx, cy) = rooms[i].center();
        let j = (0..i)
            .min_by_key(|&j| {
                let (ox, oy) = rooms[j].center();
                cx.abs_diff(ox) + cy.abs_diff(oy)
            })
            .expect("at least one earlier room");
        let (tx, ty) = rooms[j].center();
        let half = corridor / 2;
        let lo = |v: usize| v.saturating_sub(half);
        let horizontal_first = rng.gen_bool(0.5);
        let (bend_x, bend_y) = if horizontal_first { (tx, cy) } else { (cx, ty) };
        // Leg from the room to the bend, then from the bend to the target.
        for &((ax, ay), (bx, by)) in &[((cx, cy), (bend_x, bend_y)), ((bend_x, bend_y), (tx, ty))] {
            let (x0, x1) = (ax.min(bx), ax.max(bx));
            let (y0, y1) = (ay.min(by), ay.max(by));
            carve(lo(x0), lo(y0), lo(x1) + corridor, lo(y1) + corridor);
        }
    }
    Some(occ)
}

/// Number of 8-connected components of free cells.
pub(crate) fn free_components(world: &GridWorld) -> usize {
    let w = world.width();
    let h = world.height();
    let occ = world.occupancy();
    let mut seen = vec![false; w * h];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if occ[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let x = (i % w) as i64;
            let y = (i / w) as i64;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let nx = x + dx;
                    let ny = y + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let ni = ny as usize * w + nx as usize;
                    if !occ[ni] && !seen[ni] {
                        seen[ni] = true;
                        queue.push_back(ni);
                    }
                }
            }
        }
    }
    components
}
