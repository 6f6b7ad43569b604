//! Keyframed speaker motion: floor position and wrist placement over time,
//! linearly interpolated between keys.

use serde::{Deserialize, Serialize};

use super::body::{body_joints, Pose, HIP_HEIGHT};
use crate::skeleton::{JointId, Vec3};

/// Arm swing while walking: frequency in Hz and fore-aft amplitude in m.
const SWING_HZ: f64 = 0.9;
const SWING_AMPLITUDE: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Key {
    pub t: f64,
    /// Floor position in the script's ground frame.
    pub x: f64,
    pub z: f64,
    /// Wrists (left, right) in the body frame.
    pub wrists: [Vec3; 2],
}

/// Body state at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub x: f64,
    pub z: f64,
    pub wrists: [Vec3; 2],
}

impl Placement {
    /// Hip center at floor height offset by [`HIP_HEIGHT`].
    pub fn hip(&self, floor_y: f64) -> Vec3 {
        Vec3::new(self.x, floor_y + HIP_HEIGHT, self.z)
    }

    pub fn body(&self) -> [Vec3; JointId::COUNT] {
        body_joints(self.wrists)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpeakerScript {
    keys: Vec<Key>,
}

impl SpeakerScript {
    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn duration(&self) -> f64 {
        self.keys.last().map_or(0.0, |k| k.t)
    }

    /// Body state at `t`; clamps outside the keyed span.
    pub fn at(&self, t: f64) -> Option<Placement> {
        let first = self.keys.first()?;
        let i = self.keys.partition_point(|k| k.t <= t);
        if i == 0 {
            return Some(Placement { x: first.x, z: first.z, wrists: first.wrists });
        }
        let a = self.keys[i - 1];
        let Some(&b) = self.keys.get(i) else {
            return Some(Placement { x: a.x, z: a.z, wrists: a.wrists });
        };
        let alpha = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 1.0 };
        let mut wrists = [a.wrists[0].lerp(b.wrists[0], alpha), a.wrists[1].lerp(b.wrists[1], alpha)];
        let walking = (a.x, a.z) != (b.x, b.z);
        if walking && a.wrists == b.wrists {
            let s = SWING_AMPLITUDE * (std::f64::consts::TAU * SWING_HZ * (t - a.t)).sin();
            wrists[0].z += s;
            wrists[1].z -= s;
        }
        Some(Placement { x: a.x + (b.x - a.x) * alpha, z: a.z + (b.z - a.z) * alpha, wrists })
    }
}

/// Appends keys by describing what the speaker does next.
#[derive(Debug, Clone)]
pub struct ScriptBuilder {
    keys: Vec<Key>,
    cur: Key,
}

impl ScriptBuilder {
    /// Speaker standing at `(x, z)` in the neutral pose at time zero.
    pub fn new(x: f64, z: f64) -> Self {
        let cur = Key { t: 0.0, x, z, wrists: Pose::Neutral.wrists() };
        Self { keys: vec![cur], cur }
    }

    pub fn now(&self) -> f64 {
        self.cur.t
    }

    pub fn position(&self) -> (f64, f64) {
        (self.cur.x, self.cur.z)
    }

    fn push(&mut self, dt: f64) -> &mut Self {
        self.cur.t += dt.max(0.0);
        self.keys.push(self.cur);
        self
    }

    /// Stays still for `dt` seconds.
    pub fn hold(&mut self, dt: f64) -> &mut Self {
        self.push(dt)
    }

    /// Walks in a straight line at `speed` m/s. Wrists return to neutral
    /// first if they are elsewhere.
    pub fn walk_to(&mut self, x: f64, z: f64, speed: f64) -> &mut Self {
        if self.cur.wrists != Pose::Neutral.wrists() {
            self.arms(Pose::Neutral.wrists(), 0.4);
        }
        let d = (x - self.cur.x).hypot(z - self.cur.z);
        self.cur.x = x;
        self.cur.z = z;
        self.push(d / speed.max(1e-6))
    }

    /// Moves the wrists to `wrists` over `dt` seconds.
    pub fn arms(&mut self, wrists: [Vec3; 2], dt: f64) -> &mut Self {
        self.cur.wrists = wrists;
        self.push(dt)
    }

    pub fn pose(&mut self, pose: Pose, dt: f64) -> &mut Self {
        self.arms(pose.wrists(), dt)
    }

    pub fn build(&self) -> SpeakerScript {
        SpeakerScript { keys: self.keys.clone() }
    }
}
