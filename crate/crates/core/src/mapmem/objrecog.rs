use rand::Rng;

use super::GlobalMap;
use crate::geom::Pose;
use crate::world::{point_visible, GridWorld, ObjectInstance};

/// Recognition range for the object-recognition label.
pub const OBJRECOG_RANGE: f64 = 2.5;

/// Ground-truth recognition target: the category of the nearest object in
/// view within [`OBJRECOG_RANGE`], or 0 when none is.
pub fn objrecog_label(world: &GridWorld, objects: &[ObjectInstance], pose: &Pose, fov_deg: f64) -> u8 {
    let here = pose.position();
    objects
        .iter()
        .filter(|o| point_visible(world, pose, fov_deg, OBJRECOG_RANGE, o.position))
        .min_by(|a, b| here.distance(a.position).total_cmp(&here.distance(b.position)))
        .map_or(0, |o| o.category)
}

/// Noisy stand-in for a trained recogniser. Always draws one uniform number so
/// the stream advances identically whatever the label.
pub fn classifier_emulator<R: Rng + ?Sized>(
    true_label: u8,
    num_categories: u8,
    miss_rate: f64,
    confusion_rate: f64,
    rng: &mut R,
) -> u8 {
    let u: f64 = rng.gen();
    if true_label == 0 {
        return 0;
    }
    if u < miss_rate {
        0
    } else if u < miss_rate + confusion_rate && num_categories > 1 {
        let pick = rng.gen_range(1..num_categories);
        if pick >= true_label {
            pick + 1
        } else {
            pick
        }
    } else {
        true_label
    }
}

/// Writes a non-zero prediction at the agent's own cell; 0 leaves the map
/// untouched.
pub fn objrecog_update(map: &mut GlobalMap, pose: &Pose, predicted: u8) {
    if predicted == 0 {
        return;
    }
    let cell = map.geometry().cell_of(pose.position());
    map.set_obj(cell, predicted);
}
