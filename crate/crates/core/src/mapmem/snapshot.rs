use serde::{Deserialize, Serialize};

use super::{GlobalMap, MapError, MapGeometry, Occ};

pub const SNAPSHOT_VERSION: &str = "v1";

/// Serializable dump of a [`GlobalMap`]; `occ` uses codes
/// 0 = undiscovered, 1 = navigable, 2 = non-navigable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSnapshot {
    pub version: String,
    pub geometry: MapGeometry,
    pub occ: Vec<u8>,
    pub obj: Vec<u8>,
}

impl MapSnapshot {
    pub fn from_map(map: &GlobalMap) -> Self {
        Self {
            version: SNAPSHOT_VERSION.to_string(),
            geometry: map.geometry,
            occ: map.occ.iter().map(|o| o.code()).collect(),
            obj: map.obj.clone(),
        }
    }

    pub fn to_map(&self) -> Result<GlobalMap, MapError> {
        let n = self.geometry.cell_count();
        if self.occ.len() != n || self.obj.len() != n {
            return Err(MapError::GeometryMismatch(format!(
                "snapshot has {} / {} cells, geometry needs {n}",
                self.occ.len(),
                self.obj.len()
            )));
        }
        let occ = self
            .occ
            .iter()
            .map(|c| Occ::from_code(*c).ok_or_else(|| MapError::GeometryMismatch(format!("bad occupancy code {c}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GlobalMap {
            geometry: self.geometry,
            occ,
            obj: self.obj.clone(),
        })
    }
}
