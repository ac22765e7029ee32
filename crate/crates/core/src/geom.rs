//! Shared planar geometry: points, grid cells, agent poses and exact grid
//! traversal along line segments.
//!
//! Conventions used everywhere in the crate: `x` grows with the column index,
//! `y` grows with the row index, headings are measured in degrees from `+x`
//! towards `+y`.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

/// A point in metric world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Integer cell coordinates on any grid (world occupancy grid or map grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }

    /// Chebyshev neighbourhood test (excludes the cell itself).
    pub fn is_adjacent8(self, other: Cell) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }
}

/// The eight neighbour offsets, straight moves first.
pub const NEIGHBORS8: [(i32, i32); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Agent pose with a heading restricted to whole degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Degrees in `[0, 360)`.
    pub theta: u32,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: u32) -> Self {
        Self {
            x,
            y,
            theta: theta % 360,
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Returns a copy rotated by `delta` degrees (wrapped into `[0, 360)`).
    pub fn rotated(&self, delta: i32) -> Pose {
        let theta = (self.theta as i32 + delta).rem_euclid(360) as u32;
        Pose { theta, ..*self }
    }
}

/// `(cos, sin)` of an angle in degrees; exact at multiples of 90.
pub fn cos_sin_deg(deg: f64) -> (f64, f64) {
    let wrapped = deg.rem_euclid(360.0);
    if wrapped.fract() == 0.0 && (wrapped as i64) % 90 == 0 {
        return match wrapped as i64 {
            0 => (1.0, 0.0),
            90 => (0.0, 1.0),
            180 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
    }
    let rad = wrapped.to_radians();
    (rad.cos(), rad.sin())
}

/// Signed difference `a - b` of two angles in degrees, wrapped into `(-180, 180]`.
pub fn angle_diff_deg(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        d -= 360.0;
    }
    d
}

/// Bearing from `from` to `to` in degrees in `[0, 360)`.
pub fn bearing_deg(from: Point, to: Point) -> f64 {
    (to.y - from.y).atan2(to.x - from.x).to_degrees().rem_euclid(360.0)
}

/// Cell containing `p` on a grid with square cells of side `cell_size` whose
/// cell `(0, 0)` corner sits at `origin`.
pub fn cell_of(p: Point, origin: Point, cell_size: f64) -> Cell {
    Cell::new(
        ((p.x - origin.x) / cell_size).floor() as i32,
        ((p.y - origin.y) / cell_size).floor() as i32,
    )
}

/// Visits every grid cell crossed by the segment `from -> from + dir * t_end`
/// in order, calling `visit(cell, t_enter)`, where `t_enter` is the ray
/// parameter at which the segment enters the cell (0 for the starting cell).
///
/// `dir` need not be normalised; `t` is measured in units of `dir`. The grid
/// has its `(0, 0)` corner at `origin`.
pub fn walk_cells<F>(from: Point, dir: Point, t_end: f64, origin: Point, cell_size: f64, mut visit: F)
where
    F: FnMut(Cell, f64) -> ControlFlow<()>,
{
    let from = Point::new(from.x - origin.x, from.y - origin.y);
    let mut cell = cell_of(from, Point::new(0.0, 0.0), cell_size);
    if visit(cell, 0.0).is_break() {
        return;
    }
    let step_x: i32 = if dir.x > 0.0 { 1 } else { -1 };
    let step_y: i32 = if dir.y > 0.0 { 1 } else { -1 };
    let boundary = |c: i32, step: i32| -> f64 {
        if step > 0 {
            (c + 1) as f64 * cell_size
        } else {
            c as f64 * cell_size
        }
    };
    let mut t_max_x = if dir.x != 0.0 {
        (boundary(cell.x, step_x) - from.x) / dir.x
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dir.y != 0.0 {
        (boundary(cell.y, step_y) - from.y) / dir.y
    } else {
        f64::INFINITY
    };
    let t_delta_x = if dir.x != 0.0 {
        cell_size / dir.x.abs()
    } else {
        f64::INFINITY
    };
    let t_delta_y = if dir.y != 0.0 {
        cell_size / dir.y.abs()
    } else {
        f64::INFINITY
    };
    loop {
        let t_enter;
        if t_max_x < t_max_y {
            t_enter = t_max_x;
            cell.x += step_x;
            t_max_x += t_delta_x;
        } else {
            t_enter = t_max_y;
            cell.y += step_y;
            t_max_y += t_delta_y;
        }
        if !(t_enter < t_end) {
            return;
        }
        if visit(cell, t_enter.max(0.0)).is_break() {
            return;
        }
    }
}
