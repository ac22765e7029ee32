//! Occupancy-grid worlds: parsing, collision geometry, geodesics and sensing.

mod generate;
mod geodesic;
mod ray;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Cell, Point};

pub use generate::{generate_world, GenerateParams};
pub use geodesic::{distance_from_counts, geodesic_distance, geodesic_field, DistanceField};
pub(crate) use ray::ray_disc;
pub use ray::{point_visible, raycast, visible_cells, RayHit, RayKind};

/// Agent body radius used for all collision checks.
pub const AGENT_RADIUS: f64 = 0.1;
/// Goal objects are thin cylinders with this footprint radius.
pub const OBJECT_RADIUS: f64 = 0.05;
/// Default world grid resolution (metres per cell).
pub const DEFAULT_RESOLUTION: f64 = 0.1;

const WORLD_HEADER: &str = "multion-world v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("world parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("world generation failed: {0}")]
    Generation(String),
    #[error("point ({x:.3}, {y:.3}) is not navigable")]
    InvalidPoint { x: f64, y: f64 },
    #[error("target is unreachable")]
    Unreachable,
}

fn parse_err(line: usize, message: impl Into<String>) -> WorldError {
    WorldError::Parse {
        line,
        message: message.into(),
    }
}

/// An immutable occupancy grid. Row `y` of the file maps to cells with
/// `y * resolution <= world_y < (y + 1) * resolution`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    width: usize,
    height: usize,
    resolution: f64,
    occupied: Vec<bool>,
    name: String,
    #[serde(skip)]
    nodes: NodeCache,
}

/// Lazily computed geodesic node mask for the default agent radius. Never
/// part of equality.
#[derive(Clone, Default)]
struct NodeCache(std::sync::OnceLock<Vec<bool>>);

impl PartialEq for NodeCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Debug for GridWorld {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridWorld")
            .field("name", &self.name)
            .field("width", &self.width)
            .field("height", &self.height)
            .field("resolution", &self.resolution)
            .field("free_cells", &self.free_cell_count())
            .finish()
    }
}

impl GridWorld {
    /// Builds a world from a row-major occupancy vector; border cells are
    /// forced occupied.
    pub fn from_occupancy(
        name: impl Into<String>,
        width: usize,
        height: usize,
        resolution: f64,
        mut occupied: Vec<bool>,
    ) -> Result<Self, WorldError> {
        if width == 0 || height == 0 {
            return Err(parse_err(0, "empty grid"));
        }
        if occupied.len() != width * height {
            return Err(parse_err(0, "occupancy length does not match dimensions"));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(parse_err(0, format!("resolution must be > 0, got {resolution}")));
        }
        for x in 0..width {
            occupied[x] = true;
            occupied[(height - 1) * width + x] = true;
        }
        for y in 0..height {
            occupied[y * width] = true;
            occupied[y * width + width - 1] = true;
        }
        let world = GridWorld {
            width,
            height,
            resolution,
            occupied,
            name: name.into(),
            nodes: NodeCache::default(),
        };
        if world.free_cell_count() == 0 {
            return Err(parse_err(0, "world has no free cells"));
        }
        Ok(world)
    }

    /// Parses the `multion-world v1` text format.
    pub fn parse(text: &str, name: impl Into<String>) -> Result<Self, WorldError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let resolution = parse_header(header)?;
        let mut width = None;
        let mut occupied = Vec::new();
        let mut height = 0;
        for (i, row) in lines.enumerate() {
            let line_no = i + 2;
            if row.is_empty() {
                continue;
            }
            let len = row.chars().count();
            match width {
                None => width = Some(len),
                Some(w) if w != len => {
                    return Err(parse_err(
                        line_no,
                        format!("ragged row: expected {w} cells, found {len}"),
                    ))
                }
                _ => {}
            }
            for ch in row.chars() {
                occupied.push(match ch {
                    '#' => true,
                    '.' => false,
                    other => return Err(parse_err(line_no, format!("unknown cell character {other:?}"))),
                });
            }
            height += 1;
        }
        let width = width.ok_or_else(|| parse_err(2, "no grid rows"))?;
        GridWorld::from_occupancy(name, width, height, resolution, occupied)
    }

    /// Serialises to the world file format (LF line endings, trailing LF).
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * (self.height + 1) + 48);
        out.push_str(&format!("{WORLD_HEADER} resolution={}\n", self.resolution));
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.occupied[y * self.width + x] { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
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

    pub fn width_m(&self) -> f64 {
        self.width as f64 * self.resolution
    }

    pub fn height_m(&self) -> f64 {
        self.height as f64 * self.resolution
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x >= 0 && cell.y >= 0 && (cell.x as usize) < self.width && (cell.y as usize) < self.height
    }

    pub fn index(&self, cell: Cell) -> Option<usize> {
        self.in_bounds(cell)
            .then(|| cell.y as usize * self.width + cell.x as usize)
    }

    /// Out-of-bounds cells count as occupied.
    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.index(cell).is_none_or(|i| self.occupied[i])
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    pub fn free_cell_count(&self) -> usize {
        self.occupied.iter().filter(|o| !**o).count()
    }

    pub fn cell_at(&self, p: Point) -> Cell {
        crate::geom::cell_of(p, Point::new(0.0, 0.0), self.resolution)
    }

    pub fn cell_center(&self, cell: Cell) -> Point {
        Point::new(
            (cell.x as f64 + 0.5) * self.resolution,
            (cell.y as f64 + 0.5) * self.resolution,
        )
    }

    /// True iff the disc of `radius` at `(x, y)` lies inside the world and
    /// overlaps no occupied cell. Touching a cell boundary is not overlap.
    pub fn is_navigable(&self, x: f64, y: f64, radius: f64) -> bool {
        if !x.is_finite() || !y.is_finite() {
            return false;
        }
        if x - radius < 0.0 || y - radius < 0.0 || x + radius > self.width_m() || y + radius > self.height_m() {
            return false;
        }
        let p = Point::new(x, y);
        if self.is_occupied(self.cell_at(p)) {
            return false;
        }
        let res = self.resolution;
        let x0 = ((x - radius) / res).floor() as i32;
        let x1 = ((x + radius) / res).floor() as i32;
        let y0 = ((y - radius) / res).floor() as i32;
        let y1 = ((y + radius) / res).floor() as i32;
        let r2 = radius * radius;
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                let cell = Cell::new(cx, cy);
                if !self.is_occupied(cell) {
                    continue;
                }
                let dx = (cx as f64 * res - x).max(0.0).max(x - (cx + 1) as f64 * res);
                let dy = (cy as f64 * res - y).max(0.0).max(y - (cy + 1) as f64 * res);
                if dx * dx + dy * dy < r2 {
                    return false;
                }
            }
        }
        true
    }

    pub(crate) fn default_node_mask(&self) -> &[bool] {
        self.nodes.0.get_or_init(|| geodesic::node_mask(self, AGENT_RADIUS))
    }

    /// Cells whose centre can host a disc of `radius`.
    pub fn navigable_cells(&self, radius: f64) -> Vec<Cell> {
        let mut out = Vec::new();
        for y in 0..self.height as i32 {
            for x in 0..self.width as i32 {
                let cell = Cell::new(x, y);
                let c = self.cell_center(cell);
                if self.is_navigable(c.x, c.y, radius) {
                    out.push(cell);
                }
            }
        }
        out
    }
}

/// Parses `multion-world v1 resolution=<m>`.
fn parse_header(header: &str) -> Result<f64, WorldError> {
    let rest = header
        .strip_prefix(WORLD_HEADER)
        .ok_or_else(|| parse_err(1, format!("expected header `{WORLD_HEADER} resolution=<m>`")))?;
    let value = rest
        .trim()
        .strip_prefix("resolution=")
        .ok_or_else(|| parse_err(1, "missing resolution"))?;
    let resolution: f64 = value
        .parse()
        .map_err(|_| parse_err(1, format!("bad resolution {value:?}")))?;
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(parse_err(1, "resolution must be > 0"));
    }
    Ok(resolution)
}

/// Parses a world file's contents with a default name.
pub fn load_world(text: &str) -> Result<GridWorld, WorldError> {
    GridWorld::parse(text, "world")
}

/// A goal object placed in the world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    /// Category in `1..=k`.
    pub category: u8,
    pub position: Point,
    pub radius: f64,
}

impl ObjectInstance {
    pub fn new(category: u8, position: Point) -> Self {
        Self {
            category,
            position,
            radius: OBJECT_RADIUS,
        }
    }
}
