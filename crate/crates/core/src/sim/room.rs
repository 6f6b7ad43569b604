//! Classroom geometry.

use serde::{Deserialize, Serialize};

use crate::director::{Aim, Presets};
use crate::rig::{bearing_to, RigError, RigGeometry};
use crate::skeleton::Vec3;

/// Axis-aligned rectangle on the front wall (`z = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallRect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl WallRect {
    pub fn center(&self) -> Vec3 {
        Vec3::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomModel {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    pub blackboard: WallRect,
    pub canvas: WallRect,
}

impl Default for RoomModel {
    fn default() -> Self {
        Self {
            width: 6.0,
            depth: 10.0,
            height: 3.0,
            blackboard: WallRect { x0: 0.5, x1: 2.5, y0: 1.0, y1: 2.2 },
            canvas: WallRect { x0: 3.5, x1: 5.5, y0: 1.0, y1: 2.5 },
        }
    }
}

impl RoomModel {
    pub fn contains(&self, p: Vec3) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y) && (0.0..=self.depth).contains(&p.z)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.width > 0.0 && self.depth > 0.0 && self.height > 0.0) {
            return Err("room dimensions must be positive".into());
        }
        for (name, r) in [("blackboard", self.blackboard), ("canvas", self.canvas)] {
            let ok = 0.0 <= r.x0 && r.x0 < r.x1 && r.x1 <= self.width && 0.0 <= r.y0 && r.y0 < r.y1 && r.y1 <= self.height;
            if !ok {
                return Err(format!("{name} rectangle does not fit the front wall"));
            }
        }
        Ok(())
    }

    /// Presets that center the camera rig on each wall area.
    pub fn presets_for(&self, s2: &RigGeometry) -> Result<Presets, RigError> {
        let aim = |r: WallRect| {
            bearing_to(s2, r.center()).map(|(azimuth, elevation)| Aim { azimuth, elevation })
        };
        Ok(Presets { blackboard: aim(self.blackboard)?, canvas: aim(self.canvas)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_presets_point_at_the_wall_areas() {
        let p = RoomModel::default().presets_for(&RigGeometry::default_s2()).unwrap();
        let expect_bb = (-1.65f64).atan2(4.0).to_degrees();
        let expect_cv = (1.35f64).atan2(4.0).to_degrees();
        assert!((p.blackboard.azimuth - expect_bb).abs() < 1e-9);
        assert!((p.canvas.azimuth - expect_cv).abs() < 1e-9);
        assert!(p.blackboard.elevation > 0.0 && p.canvas.elevation > p.blackboard.elevation);
    }

    #[test]
    fn validation() {
        let mut room = RoomModel::default();
        assert!(room.validate().is_ok());
        room.canvas.x1 = 7.0;
        assert!(room.validate().is_err());
    }
}
