use super::projection::{ego_offset, ego_to_global};
use super::{EgoFrame, EgoView, FeatureMap, GlobalMap, MapError, MapGeometry, Occ};
use crate::geom::{Cell, Pose};

/// A map that can be sampled cell by cell for an egocentric crop.
pub trait CropSource {
    type Value: Clone;
    fn geometry(&self) -> &MapGeometry;
    /// Value at an in-map cell.
    fn sample(&self, cell: Cell) -> Self::Value;
    /// Value used for samples that fall outside the map.
    fn neutral(&self) -> Self::Value;
}

impl CropSource for GlobalMap {
    type Value = (Occ, u8);

    fn geometry(&self) -> &MapGeometry {
        &self.geometry
    }

    fn sample(&self, cell: Cell) -> (Occ, u8) {
        (self.occ(cell), self.obj(cell))
    }

    fn neutral(&self) -> (Occ, u8) {
        (Occ::Undiscovered, 0)
    }
}

impl CropSource for FeatureMap {
    type Value = Vec<f64>;

    fn geometry(&self) -> &MapGeometry {
        &self.geometry
    }

    fn sample(&self, cell: Cell) -> Vec<f64> {
        self.get(cell).map_or_else(|| self.neutral(), <[f64]>::to_vec)
    }

    fn neutral(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }
}

/// `v x v` view centred on the agent's cell and turned so that row 0 lies
/// straight ahead; column index grows towards the agent's left. Sampling is
/// nearest-neighbour from the centre of the agent's cell.
pub fn ego_crop<M: CropSource>(map: &M, pose: &Pose, v: usize) -> Result<EgoView<M::Value>, MapError> {
    if v == 0 || v.is_multiple_of(2) {
        return Err(MapError::InvalidView(v));
    }
    let g = *map.geometry();
    let frame = EgoFrame::Policy { cell_size: g.cell_size };
    let anchor = g.cell_center(g.cell_of(pose.position()));
    let mut cells = Vec::with_capacity(v * v);
    for row in 0..v {
        for col in 0..v {
            let (fwd, lat) = ego_offset(frame, v, v, row, col);
            let cell = g.cell_of(ego_to_global(anchor, pose.theta, fwd, lat));
            cells.push(if g.contains(cell) {
                map.sample(cell)
            } else {
                map.neutral()
            });
        }
    }
    Ok(EgoView {
        rows: v,
        cols: v,
        frame,
        cells,
    })
}
