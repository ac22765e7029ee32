use log::warn;
use serde::{Deserialize, Serialize};

use super::{GlobalMap, MapError, MapGeometry, Occ};
use crate::geom::Cell;
use crate::world::{GridWorld, ObjectInstance};

/// Which channels an oracle map carries; the disabled one keeps its neutral
/// value (undiscovered / no goal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Channels {
    #[default]
    OccObj,
    Occ,
    Obj,
}

/// Ground-truth map: a cell is navigable when strictly more than half of the
/// world cells whose centres fall inside it are free.
pub fn build_oracle_map(
    world: &GridWorld,
    objects: &[ObjectInstance],
    geometry: &MapGeometry,
    channels: Channels,
) -> Result<GlobalMap, MapError> {
    if !geometry.covers(world) {
        return Err(MapError::GeometryMismatch(format!(
            "map {:?} does not cover world {}x{} m",
            geometry,
            world.width_m(),
            world.height_m()
        )));
    }
    let mut map = GlobalMap::empty(*geometry);
    if channels != Channels::Obj {
        let mut free = vec![0u32; geometry.cell_count()];
        let mut total = vec![0u32; geometry.cell_count()];
        let occ = world.occupancy();
        for y in 0..world.height() {
            for x in 0..world.width() {
                let wc = Cell::new(x as i32, y as i32);
                let Some(i) = geometry.index(geometry.cell_of(world.cell_center(wc))) else {
                    continue;
                };
                total[i] += 1;
                if !occ[y * world.width() + x] {
                    free[i] += 1;
                }
            }
        }
        for i in 0..geometry.cell_count() {
            map.occ[i] = match total[i] {
                0 => Occ::Undiscovered,
                t if free[i] * 2 > t => Occ::Navigable,
                _ => Occ::NonNavigable,
            };
        }
    }
    if channels != Channels::Occ {
        for obj in objects {
            let Some(i) = geometry.index(geometry.cell_of(obj.position)) else {
                continue;
            };
            if map.obj[i] != 0 {
                warn!(
                    "objects {} and {} share map cell {:?}; keeping the later one",
                    map.obj[i],
                    obj.category,
                    geometry.cell_at_index(i)
                );
            }
            map.obj[i] = obj.category;
        }
    }
    Ok(map)
}

/// Copies oracle occupancy and objects into `revealed` for every visible cell.
/// Already revealed cells stay revealed.
pub fn reveal(revealed: &mut GlobalMap, oracle: &GlobalMap, visible: &[Cell]) -> Result<(), MapError> {
    revealed.same_geometry(oracle)?;
    for &cell in visible {
        if let Some(i) = revealed.geometry.index(cell) {
            revealed.occ[i] = oracle.occ[i];
            revealed.obj[i] = oracle.obj[i];
        }
    }
    Ok(())
}

/// Keeps only the current goal's category in the object channel.
pub fn dynamic_filter(map: &GlobalMap, current_goal_category: u8) -> GlobalMap {
    let mut out = map.clone();
    for v in &mut out.obj {
        if *v != current_goal_category {
            *v = 0;
        }
    }
    out
}
