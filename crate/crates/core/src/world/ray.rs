//! Ray casting and line-of-sight visibility.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::{GridWorld, ObjectInstance};
use crate::geom::{angle_diff_deg, bearing_deg, cos_sin_deg, walk_cells, Cell, Point, Pose};
use crate::mapmem::MapGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayKind {
    Wall,
    Object(u8),
    MaxRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayHit {
    pub distance: f64,
    pub kind: RayKind,
}

/// Smallest `t >= 0` at which the unit ray `origin + t * dir` meets the disc.
pub(crate) fn ray_disc(origin: Point, dir: Point, center: Point, radius: f64) -> Option<f64> {
    let ox = origin.x - center.x;
    let oy = origin.y - center.y;
    let c = ox * ox + oy * oy - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let b = ox * dir.x + oy * dir.y;
    if b >= 0.0 {
        return None;
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    Some(-b - disc.sqrt())
}

/// Distance along the ray to the first occupied cell, capped at `max_range`.
fn wall_distance(world: &GridWorld, origin: Point, dir: Point, max_range: f64) -> Option<f64> {
    let mut hit = None;
    walk_cells(
        origin,
        dir,
        max_range,
        Point::new(0.0, 0.0),
        world.resolution(),
        |cell, t| {
            if world.is_occupied(cell) {
                hit = Some(t);
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        },
    );
    hit
}

/// First intersection of the ray with a wall or an object disc.
pub fn raycast(world: &GridWorld, objects: &[ObjectInstance], origin: Point, angle_deg: f64, max_range: f64) -> RayHit {
    let (c, s) = cos_sin_deg(angle_deg);
    let dir = Point::new(c, s);
    let mut best = match wall_distance(world, origin, dir, max_range) {
        Some(d) => RayHit {
            distance: d,
            kind: RayKind::Wall,
        },
        None => RayHit {
            distance: max_range,
            kind: RayKind::MaxRange,
        },
    };
    for obj in objects {
        if let Some(t) = ray_disc(origin, dir, obj.position, obj.radius) {
            if t <= max_range && t < best.distance {
                best = RayHit {
                    distance: t,
                    kind: RayKind::Object(obj.category),
                };
            }
        }
    }
    best
}

/// Line of sight from `from` to `to` through free world cells. Cells for
/// which `ignore` returns true do not block.
fn line_clear(world: &GridWorld, from: Point, to: Point, mut stop_at: impl FnMut(Cell) -> bool) -> bool {
    let dir = Point::new(to.x - from.x, to.y - from.y);
    let mut clear = true;
    walk_cells(from, dir, 1.0, Point::new(0.0, 0.0), world.resolution(), |cell, _| {
        if stop_at(cell) {
            return ControlFlow::Break(());
        }
        if world.is_occupied(cell) {
            clear = false;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    clear
}

fn in_view(pose: &Pose, target: Point, fov_deg: f64, range: f64) -> bool {
    let d = pose.position().distance(target);
    if d >= range {
        return false;
    }
    if d == 0.0 {
        return true;
    }
    angle_diff_deg(bearing_deg(pose.position(), target), pose.theta as f64).abs() <= fov_deg / 2.0
}

/// The three visibility conditions applied to a single point: inside the
/// field of view, closer than `range`, and unobstructed.
pub fn point_visible(world: &GridWorld, pose: &Pose, fov_deg: f64, range: f64, target: Point) -> bool {
    if !in_view(pose, target, fov_deg, range) {
        return false;
    }
    let target_cell = world.cell_at(target);
    line_clear(world, pose.position(), target, |c| c == target_cell)
}

/// Map cells whose centres satisfy the visibility conditions. World cells
/// lying inside the target map cell do not occlude it, so wall faces can be
/// seen. Returned in row-major order.
pub fn visible_cells(world: &GridWorld, pose: &Pose, fov_deg: f64, range: f64, geometry: &MapGeometry) -> Vec<Cell> {
    let mut out = Vec::new();
    let agent = pose.position();
    let lo = geometry.cell_of(Point::new(agent.x - range, agent.y - range));
    let hi = geometry.cell_of(Point::new(agent.x + range, agent.y + range));
    let n = geometry.size_cells as i32;
    for y in lo.y.max(0)..=hi.y.min(n - 1) {
        for x in lo.x.max(0)..=hi.x.min(n - 1) {
            let cell = Cell::new(x, y);
            let center = geometry.cell_center(cell);
            if !in_view(pose, center, fov_deg, range) {
                continue;
            }
            let inside = |wc: Cell| geometry.cell_of(world.cell_center(wc)) == cell;
            if line_clear(world, agent, center, inside) {
                out.push(cell);
            }
        }
    }
    out
}
