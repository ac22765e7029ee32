use serde::{Deserialize, Serialize};

use super::{EgoFrame, EgoView, FeatureMap, MapError};
use crate::geom::{cos_sin_deg, Point, Pose};
use crate::sim::Observation;

/// Egocentric projection grid. Row 0 is the row next to the agent, which
/// sits at the middle of the back edge; columns grow towards the agent's
/// left (positive lateral offset).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub rows: usize,
    pub cols: usize,
    pub cutoff: f64,
    pub cell_size: f64,
    pub fov_deg: f64,
    pub max_depth: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            rows: 7,
            cols: 13,
            cutoff: 5.6,
            cell_size: 0.8,
            fov_deg: 79.0,
            max_depth: 10.0,
        }
    }
}

impl ProjectionConfig {
    /// Smallest grid that holds every point up to `cutoff` ahead at this cell
    /// size: 7 x 13 at 0.8 m.
    pub fn covering(cutoff: f64, cell_size: f64) -> Self {
        let rows = (cutoff / cell_size - 1e-9).ceil().max(1.0) as usize;
        Self {
            rows,
            cols: 2 * rows - 1,
            cutoff,
            cell_size,
            ..Self::default()
        }
    }

    /// Ray offsets relative to the heading, evenly spanning the field of view.
    pub fn ray_offset(&self, i: usize, n: usize) -> f64 {
        ray_offset_deg(self.fov_deg, i, n)
    }

    /// Projection-frame cell of an agent-relative point, if inside the grid.
    pub fn cell_of(&self, fwd: f64, lat: f64) -> Option<(usize, usize)> {
        let row = (fwd / self.cell_size).floor();
        let col = (lat / self.cell_size + self.cols as f64 / 2.0).floor();
        (row >= 0.0 && col >= 0.0 && (row as usize) < self.rows && (col as usize) < self.cols)
            .then_some((row as usize, col as usize))
    }
}

pub fn ray_offset_deg(fov_deg: f64, i: usize, n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    -fov_deg / 2.0 + i as f64 * fov_deg / (n - 1) as f64
}

/// What the feature function sees of one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub offset_deg: f64,
    /// Wall depth.
    pub depth: f64,
    pub wall_hit: bool,
    pub semantic: Option<u8>,
    /// Range of the semantic hit; equals `depth` when nothing was hit.
    pub semantic_range: f64,
}

/// A feature vector to deposit at `range` along a ray.
pub type Deposit = (f64, Vec<f64>);

/// One-hot of the semantic label (index 0 = none) followed by a wall-hit
/// flag, so `F = k + 2`. Object labels are placed at the object's range,
/// walls at the wall depth.
pub fn default_features(num_categories: u8) -> impl Fn(&RaySample) -> Vec<Deposit> {
    let dim = num_categories as usize + 2;
    move |ray: &RaySample| {
        let mut out = Vec::with_capacity(2);
        if let Some(c) = ray.semantic {
            let mut f = vec![0.0; dim];
            f[c as usize] = 1.0;
            out.push((ray.semantic_range, f));
        }
        if ray.wall_hit {
            let mut f = vec![0.0; dim];
            f[0] = 1.0;
            f[dim - 1] = 1.0;
            out.push((ray.depth, f));
        }
        out
    }
}

/// Depth-conditioned projection of per-ray features into the egocentric
/// grid. Deposits past the cutoff are dropped; cells combine by element-wise
/// max.
pub fn project_features<F>(obs: &Observation, dim: usize, feature_fn: F, config: &ProjectionConfig) -> EgoView<Vec<f64>>
where
    F: Fn(&RaySample) -> Vec<Deposit>,
{
    let mut view = EgoView::filled(
        config.rows,
        config.cols,
        EgoFrame::Projection {
            cell_size: config.cell_size,
        },
        vec![0.0; dim],
    );
    let n = obs.depth_scan.len();
    for i in 0..n {
        let depth = obs.depth_scan[i];
        let ray = RaySample {
            offset_deg: config.ray_offset(i, n),
            depth,
            wall_hit: depth < config.max_depth,
            semantic: obs.semantic_scan[i],
            semantic_range: obs.semantic_range[i],
        };
        let (c, s) = cos_sin_deg(ray.offset_deg);
        for (range, feat) in feature_fn(&ray) {
            if range > config.cutoff {
                continue;
            }
            let Some((row, col)) = config.cell_of(range * c, range * s) else {
                continue;
            };
            for (slot, v) in view.get_mut(row, col).iter_mut().zip(&feat) {
                if *v > *slot {
                    *slot = *v;
                }
            }
        }
    }
    view
}

/// Agent-relative `(forward, lateral)` offset of an ego cell centre.
pub(crate) fn ego_offset(frame: EgoFrame, rows: usize, cols: usize, row: usize, col: usize) -> (f64, f64) {
    let cs = frame.cell_size();
    match frame {
        EgoFrame::Projection { .. } => ((row as f64 + 0.5) * cs, (col as f64 + 0.5 - cols as f64 / 2.0) * cs),
        EgoFrame::Policy { .. } => (
            ((rows / 2) as f64 - row as f64) * cs,
            (col as f64 - (cols / 2) as f64) * cs,
        ),
    }
}

/// Global point of an agent-relative offset. Projection-frame offsets are
/// relative to the agent's position, policy-frame offsets to the centre of
/// the agent's map cell.
pub(crate) fn ego_to_global(anchor: Point, theta: u32, fwd: f64, lat: f64) -> Point {
    let (c, s) = cos_sin_deg(theta as f64);
    Point::new(anchor.x + fwd * c - lat * s, anchor.y + fwd * s + lat * c)
}

/// Rigidly transforms every nonzero ego cell into the global map and
/// integrates it by element-wise max. Cells landing outside are dropped.
pub fn register(ego: &EgoView<Vec<f64>>, global: &mut FeatureMap, pose: &Pose) -> Result<(), MapError> {
    let g = *global.geometry();
    if (ego.frame.cell_size() - g.cell_size).abs() > 1e-12 {
        return Err(MapError::GeometryMismatch(format!(
            "ego cell size {} vs map cell size {}",
            ego.frame.cell_size(),
            g.cell_size
        )));
    }
    let anchor = match ego.frame {
        EgoFrame::Projection { .. } => pose.position(),
        EgoFrame::Policy { .. } => g.cell_center(g.cell_of(pose.position())),
    };
    for row in 0..ego.rows {
        for col in 0..ego.cols {
            let feat = ego.get(row, col);
            if feat.iter().all(|v| *v == 0.0) {
                continue;
            }
            if feat.len() != global.dim() {
                return Err(MapError::GeometryMismatch(format!(
                    "feature dim {} vs map dim {}",
                    feat.len(),
                    global.dim()
                )));
            }
            let (fwd, lat) = ego_offset(ego.frame, ego.rows, ego.cols, row, col);
            let p = ego_to_global(anchor, pose.theta, fwd, lat);
            global.max_into(g.cell_of(p), feat);
        }
    }
    Ok(())
}
