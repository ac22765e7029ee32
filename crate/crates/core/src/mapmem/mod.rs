//! Allocentric map memories and the egocentric views cut from them.
//!
//! Two memories are provided: [`GlobalMap`], a categorical grid with a
//! tri-state occupancy channel and an object-category channel, and
//! [`FeatureMap`], a grid of real feature vectors integrated by element-wise
//! max. Both share a [`MapGeometry`].

mod crop;
mod objrecog;
mod oracle;
mod projection;
mod snapshot;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{cell_of, Cell, Point};
use crate::world::GridWorld;

pub use crop::{ego_crop, CropSource};
pub use objrecog::{classifier_emulator, objrecog_label, objrecog_update, OBJRECOG_RANGE};
pub use oracle::{build_oracle_map, dynamic_filter, reveal, Channels};
pub use projection::{
    default_features, project_features, ray_offset_deg, register, Deposit, ProjectionConfig, RaySample,
};
pub use snapshot::MapSnapshot;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("invalid view size {0}: must be odd and positive")]
    InvalidView(usize),
}

/// Square grid placement: `size_cells` x `size_cells` cells of side
/// `cell_size`, cell `(0, 0)` has its corner at `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapGeometry {
    pub size_cells: usize,
    pub cell_size: f64,
    pub origin: Point,
}

impl Default for MapGeometry {
    fn default() -> Self {
        Self::desk()
    }
}

impl MapGeometry {
    pub fn new(size_cells: usize, cell_size: f64, origin: Point) -> Self {
        Self {
            size_cells,
            cell_size,
            origin,
        }
    }

    /// 64 x 64 cells of 0.4 m, sized for ~25 m worlds.
    pub fn desk() -> Self {
        Self::new(64, 0.4, Point::new(0.0, 0.0))
    }

    /// 300 x 300 cells of 0.8 m.
    pub fn full_scale() -> Self {
        Self::new(300, 0.8, Point::new(0.0, 0.0))
    }

    pub fn cell_count(&self) -> usize {
        self.size_cells * self.size_cells
    }

    pub fn extent(&self) -> f64 {
        self.size_cells as f64 * self.cell_size
    }

    pub fn cell_of(&self, p: Point) -> Cell {
        cell_of(p, self.origin, self.cell_size)
    }

    pub fn cell_center(&self, cell: Cell) -> Point {
        Point::new(
            self.origin.x + (cell.x as f64 + 0.5) * self.cell_size,
            self.origin.y + (cell.y as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x >= 0 && cell.y >= 0 && (cell.x as usize) < self.size_cells && (cell.y as usize) < self.size_cells
    }

    pub fn index(&self, cell: Cell) -> Option<usize> {
        self.contains(cell)
            .then(|| cell.y as usize * self.size_cells + cell.x as usize)
    }

    pub fn cell_at_index(&self, index: usize) -> Cell {
        Cell::new((index % self.size_cells) as i32, (index / self.size_cells) as i32)
    }

    pub fn covers(&self, world: &GridWorld) -> bool {
        self.cell_size > 0.0
            && self.origin.x <= 0.0
            && self.origin.y <= 0.0
            && self.origin.x + self.extent() >= world.width_m() - 1e-9
            && self.origin.y + self.extent() >= world.height_m() - 1e-9
    }
}

/// Occupancy state of a map cell. Cells outside the scene share the
/// `Undiscovered` code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[repr(u8)]
pub enum Occ {
    #[default]
    Undiscovered = 0,
    Navigable = 1,
    NonNavigable = 2,
}

impl Occ {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Occ> {
        match code {
            0 => Some(Occ::Undiscovered),
            1 => Some(Occ::Navigable),
            2 => Some(Occ::NonNavigable),
            _ => None,
        }
    }
}

/// Categorical allocentric map. `obj` holds `0` for "no goal" and `1..=k`
/// for goal categories.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMap {
    geometry: MapGeometry,
    occ: Vec<Occ>,
    obj: Vec<u8>,
}

impl GlobalMap {
    /// All cells undiscovered, no objects.
    pub fn empty(geometry: MapGeometry) -> Self {
        Self {
            geometry,
            occ: vec![Occ::Undiscovered; geometry.cell_count()],
            obj: vec![0; geometry.cell_count()],
        }
    }

    pub fn geometry(&self) -> &MapGeometry {
        &self.geometry
    }

    pub fn occ(&self, cell: Cell) -> Occ {
        self.geometry.index(cell).map_or(Occ::Undiscovered, |i| self.occ[i])
    }

    pub fn obj(&self, cell: Cell) -> u8 {
        self.geometry.index(cell).map_or(0, |i| self.obj[i])
    }

    pub fn set_occ(&mut self, cell: Cell, value: Occ) {
        if let Some(i) = self.geometry.index(cell) {
            self.occ[i] = value;
        }
    }

    pub fn set_obj(&mut self, cell: Cell, value: u8) {
        if let Some(i) = self.geometry.index(cell) {
            self.obj[i] = value;
        }
    }

    pub fn occ_slice(&self) -> &[Occ] {
        &self.occ
    }

    pub fn obj_slice(&self) -> &[u8] {
        &self.obj
    }

    /// Number of cells whose occupancy is known.
    pub fn discovered_count(&self) -> usize {
        self.occ.iter().filter(|o| **o != Occ::Undiscovered).count()
    }

    /// Cells holding `category`, in row-major order.
    pub fn cells_with_category(&self, category: u8) -> Vec<Cell> {
        self.obj
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == category && category != 0)
            .map(|(i, _)| self.geometry.cell_at_index(i))
            .collect()
    }

    pub(crate) fn same_geometry(&self, other: &GlobalMap) -> Result<(), MapError> {
        if self.geometry != other.geometry {
            return Err(MapError::GeometryMismatch(format!(
                "{:?} vs {:?}",
                self.geometry, other.geometry
            )));
        }
        Ok(())
    }
}

/// Map of `dim`-dimensional feature vectors; unwritten cells are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    geometry: MapGeometry,
    dim: usize,
    feat: Vec<f64>,
}

impl FeatureMap {
    pub fn new(geometry: MapGeometry, dim: usize) -> Self {
        Self {
            geometry,
            dim,
            feat: vec![0.0; geometry.cell_count() * dim],
        }
    }

    pub fn geometry(&self) -> &MapGeometry {
        &self.geometry
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Feature vector at a cell; `None` outside the map.
    pub fn get(&self, cell: Cell) -> Option<&[f64]> {
        let i = self.geometry.index(cell)?;
        Some(&self.feat[i * self.dim..(i + 1) * self.dim])
    }

    /// Element-wise max of `values` into the cell. Returns false outside.
    pub fn max_into(&mut self, cell: Cell, values: &[f64]) -> bool {
        debug_assert_eq!(values.len(), self.dim);
        let Some(i) = self.geometry.index(cell) else {
            return false;
        };
        for (slot, v) in self.feat[i * self.dim..(i + 1) * self.dim].iter_mut().zip(values) {
            if *v > *slot {
                *slot = *v;
            }
        }
        true
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.feat
    }
}

/// Which coordinate frame an [`EgoView`] lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EgoFrame {
    /// Agent-centred policy crop: the agent's cell is the centre, row 0 is
    /// farthest ahead.
    Policy { cell_size: f64 },
    /// Projection frame: the agent sits at the middle of the back edge,
    /// row 0 is the row adjacent to the agent.
    Projection { cell_size: f64 },
}

impl EgoFrame {
    pub fn cell_size(&self) -> f64 {
        match *self {
            EgoFrame::Policy { cell_size } | EgoFrame::Projection { cell_size } => cell_size,
        }
    }
}

/// A small agent-relative grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoView<T> {
    pub rows: usize,
    pub cols: usize,
    pub frame: EgoFrame,
    pub cells: Vec<T>,
}

impl<T: Clone> EgoView<T> {
    pub fn filled(rows: usize, cols: usize, frame: EgoFrame, value: T) -> Self {
        Self {
            rows,
            cols,
            frame,
            cells: vec![value; rows * cols],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.cells[row * self.cols + col]
    }

    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.cells[row * self.cols + col]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_quantization() {
        let g = MapGeometry::new(10, 0.8, Point::new(0.0, 0.0));
        assert_eq!(g.cell_of(Point::new(3.1, 3.1)), Cell::new(3, 3));
        assert_eq!(g.cell_of(Point::new(-0.1, 0.0)), Cell::new(-1, 0));
        assert!(!g.contains(Cell::new(-1, 0)));
        let c = g.cell_center(Cell::new(2, 1));
        assert!((c.x - 2.0).abs() < 1e-12 && (c.y - 1.2).abs() < 1e-12);
    }

    #[test]
    fn feature_max_into() {
        let mut f = FeatureMap::new(MapGeometry::new(4, 1.0, Point::new(0.0, 0.0)), 2);
        assert!(f.max_into(Cell::new(1, 1), &[1.0, 0.0]));
        assert!(f.max_into(Cell::new(1, 1), &[0.0, 1.0]));
        assert_eq!(f.get(Cell::new(1, 1)).unwrap(), &[1.0, 1.0]);
        assert!(!f.max_into(Cell::new(9, 1), &[1.0, 1.0]));
    }
}
