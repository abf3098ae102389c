//! The two example theories shipped with the crate: a robot facing a wall,
//! with a discrete and a continuous belief about its distance `h`.

use super::ActionTheory;

pub const WALL_DISCRETE: &str = include_str!("../../../../theories/wall-discrete.theory");
pub const WALL_CONTINUOUS: &str = include_str!("../../../../theories/wall-continuous.theory");

/// Looks a bundled theory up by name.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "wall-discrete" => Some(WALL_DISCRETE),
        "wall-continuous" => Some(WALL_CONTINUOUS),
        _ => None,
    }
}

pub fn wall_discrete() -> ActionTheory {
    ActionTheory::load(WALL_DISCRETE).expect("bundled theory is valid")
}

pub fn wall_continuous() -> ActionTheory {
    ActionTheory::load(WALL_CONTINUOUS).expect("bundled theory is valid")
}
