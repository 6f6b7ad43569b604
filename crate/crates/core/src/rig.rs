//! Pan/tilt rig kinematics.
//!
//! Room frame: `x` runs along the front wall from its left corner (as seen
//! from the audience), `y` is up from the floor and `z` runs back from the
//! front wall. A rig at home looks straight at the front wall (toward `-z`).
//! Positive azimuth turns toward `+x`; positive elevation looks up.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::{steps_to_angle, MotionProfile, MotorFsm, MotorGeometry, MotorState, StepEvent};
use crate::skeleton::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum RigError {
    #[error("target point coincides with the rig mount")]
    CoincidentPoint,
    #[error("invalid rig geometry: {0}")]
    BadGeometry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RigId {
    /// Carries the depth sensor; always follows the speaker.
    S1,
    /// Carries the recording camera.
    S2,
}

/// Wire motor numbers.
pub const MOTOR_S1_PAN: u8 = 0;
pub const MOTOR_S2_PAN: u8 = 1;
pub const MOTOR_S2_TILT: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TiltDrive {
    Stepper { motor: MotorGeometry },
    /// Rate-limited position servo addressed in fixed angular units.
    Servo { slew: f64, unit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigGeometry {
    pub mount_position: Vec3,
    pub pan_motor: MotorGeometry,
    pub tilt: TiltDrive,
    pub pan_limits: (f64, f64),
    pub tilt_limits: (f64, f64),
    pub fov_h: f64,
    pub fov_v: f64,
}

impl RigGeometry {
    pub fn default_s1() -> Self {
        Self {
            mount_position: Vec3::new(2.85, 1.2, 4.0),
            pan_motor: MotorGeometry { step_angle: 1.8, gear_ratio: 1.0 },
            tilt: TiltDrive::Servo { slew: 10.0, unit: 0.1 },
            pan_limits: (-90.0, 90.0),
            tilt_limits: (-27.0, 27.0),
            fov_h: 57.0,
            fov_v: 43.0,
        }
    }

    pub fn default_s2() -> Self {
        Self {
            mount_position: Vec3::new(3.15, 1.2, 4.0),
            pan_motor: MotorGeometry { step_angle: 1.8, gear_ratio: 4.0 },
            tilt: TiltDrive::Stepper { motor: MotorGeometry { step_angle: 1.8, gear_ratio: 4.0 } },
            pan_limits: (-90.0, 90.0),
            tilt_limits: (-30.0, 30.0),
            fov_h: 60.0,
            fov_v: 36.0,
        }
    }

    pub fn validate(&self) -> Result<(), RigError> {
        let bad = |m: String| Err(RigError::BadGeometry(m));
        if !self.mount_position.is_finite() {
            return bad("mount position must be finite".into());
        }
        for (name, (lo, hi)) in [("pan", self.pan_limits), ("tilt", self.tilt_limits)] {
            if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                return bad(format!("{name} limits ({lo}, {hi}) are not ordered"));
            }
        }
        for (name, fov) in [("fov_h", self.fov_h), ("fov_v", self.fov_v)] {
            if !(fov > 0.0 && fov < 180.0) {
                return bad(format!("{name} must be in (0, 180), got {fov}"));
            }
        }
        let motors = match self.tilt {
            TiltDrive::Stepper { motor } => vec![self.pan_motor, motor],
            TiltDrive::Servo { slew, unit } => {
                if !(slew > 0.0 && unit > 0.0) {
                    return bad("servo slew and unit must be positive".into());
                }
                vec![self.pan_motor]
            }
        };
        for m in motors {
            if !(m.step_angle > 0.0 && m.gear_ratio > 0.0) {
                return bad("step angle and gear ratio must be positive".into());
            }
        }
        Ok(())
    }

    fn pan_step_limits(&self) -> (i64, i64) {
        step_limits(self.pan_limits, self.pan_motor.degrees_per_step())
    }
}

fn step_limits((lo, hi): (f64, f64), per_step: f64) -> (i64, i64) {
    ((lo / per_step - 1e-9).ceil() as i64, (hi / per_step + 1e-9).floor() as i64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServoAxis {
    /// Position in drive units; fractional while slewing.
    pub position: f64,
    pub setpoint: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TiltAxis {
    Stepper(MotorFsm),
    Servo(ServoAxis),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigState {
    pub pan: MotorFsm,
    pub tilt: TiltAxis,
    pub clock: f64,
}

impl RigState {
    /// A rig at home with its motors idle.
    pub fn home(geometry: &RigGeometry, pan_motor: u8, tilt_motor: u8, profile: &MotionProfile) -> Self {
        let tilt = match geometry.tilt {
            TiltDrive::Stepper { .. } => TiltAxis::Stepper(MotorFsm::new(tilt_motor, profile.clone())),
            TiltDrive::Servo { .. } => TiltAxis::Servo(ServoAxis { position: 0.0, setpoint: 0.0 }),
        };
        Self { pan: MotorFsm::new(pan_motor, profile.clone()), tilt, clock: 0.0 }
    }

    pub fn pan_steps(&self) -> i64 {
        self.pan.position()
    }

    /// Tilt position in steps, or in whole drive units for a servo.
    pub fn tilt_steps(&self) -> i64 {
        match &self.tilt {
            TiltAxis::Stepper(m) => m.position(),
            TiltAxis::Servo(s) => s.position.round() as i64,
        }
    }

    pub fn is_idle(&self) -> bool {
        let tilt_idle = match &self.tilt {
            TiltAxis::Stepper(m) => m.is_idle(),
            TiltAxis::Servo(s) => s.position == s.setpoint,
        };
        self.pan.is_idle() && tilt_idle
    }
}

/// Current (azimuth, elevation) in degrees.
pub fn orientation(state: &RigState, geometry: &RigGeometry) -> (f64, f64) {
    let az = steps_to_angle(state.pan.position(), &geometry.pan_motor);
    let el = match (&state.tilt, geometry.tilt) {
        (TiltAxis::Stepper(m), TiltDrive::Stepper { motor }) => steps_to_angle(m.position(), &motor),
        (TiltAxis::Servo(s), TiltDrive::Servo { unit, .. }) => s.position * unit,
        _ => 0.0,
    };
    (az, el)
}

/// Direction from the rig mount to `point` as (azimuth, elevation) degrees.
pub fn bearing_to(geometry: &RigGeometry, point: Vec3) -> Result<(f64, f64), RigError> {
    let d = point - geometry.mount_position;
    if d.norm() < 1e-12 {
        return Err(RigError::CoincidentPoint);
    }
    let az = d.x.atan2(-d.z).to_degrees();
    let el = d.y.atan2(d.x.hypot(d.z)).to_degrees();
    Ok((az, el))
}

/// Difference `a - b` wrapped into (-180, 180].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % 360.0;
    if d > 180.0 {
        d -= 360.0;
    } else if d <= -180.0 {
        d += 360.0;
    }
    d
}

/// Whether `point` lies inside the rig's current field of view. The
/// boundary counts as inside.
pub fn in_fov(state: &RigState, geometry: &RigGeometry, point: Vec3) -> bool {
    let Ok((az, el)) = bearing_to(geometry, point) else {
        return false;
    };
    let (cur_az, cur_el) = orientation(state, geometry);
    angle_diff(az, cur_az).abs() <= geometry.fov_h / 2.0 && (el - cur_el).abs() <= geometry.fov_v / 2.0
}

/// Runs every axis forward by `dt` seconds and returns the steps taken, in
/// time order.
pub fn advance(state: &mut RigState, geometry: &RigGeometry, dt: f64) -> Vec<StepEvent> {
    if !(dt > 0.0) {
        return Vec::new();
    }
    let end = state.clock + dt.max(0.0);
    let mut events = Vec::new();
    drain(&mut state.pan, end, &mut events);
    match (&mut state.tilt, geometry.tilt) {
        (TiltAxis::Stepper(m), _) => drain(m, end, &mut events),
        (TiltAxis::Servo(s), TiltDrive::Servo { slew, unit }) => {
            let max_units = slew * (end - state.clock) / unit;
            let delta = (s.setpoint - s.position).clamp(-max_units, max_units);
            s.position = if (s.setpoint - s.position).abs() <= max_units { s.setpoint } else { s.position + delta };
        }
        _ => {}
    }
    state.clock = end;
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    events
}

fn drain(m: &mut MotorFsm, now: f64, out: &mut Vec<StepEvent>) {
    // `now` never regresses here: the rig clock only moves forward.
    while let Ok(Some(ev)) = m.tick(now) {
        out.push(ev);
    }
}

// ── Rig ────────────────────────────────────────────────────

/// One rig: geometry plus live state.
#[derive(Debug, Clone, PartialEq)]
pub struct Rig {
    pub id: RigId,
    pub geometry: RigGeometry,
    pub state: RigState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigSnapshot {
    pub rig: RigId,
    pub azimuth: f64,
    pub elevation: f64,
    pub pan_steps: i64,
    pub tilt_steps: i64,
    pub pan_state: MotorState,
    pub tilt_state: MotorState,
}

impl Rig {
    pub fn new(id: RigId, geometry: RigGeometry, profile: &MotionProfile) -> Self {
        let (pan, tilt) = match id {
            RigId::S1 => (MOTOR_S1_PAN, u8::MAX),
            RigId::S2 => (MOTOR_S2_PAN, MOTOR_S2_TILT),
        };
        let state = RigState::home(&geometry, pan, tilt, profile);
        Self { id, geometry, state }
    }

    pub fn orientation(&self) -> (f64, f64) {
        orientation(&self.state, &self.geometry)
    }

    pub fn bearing_to(&self, point: Vec3) -> Result<(f64, f64), RigError> {
        bearing_to(&self.geometry, point)
    }

    pub fn in_fov(&self, point: Vec3) -> bool {
        in_fov(&self.state, &self.geometry, point)
    }

    pub fn advance(&mut self, dt: f64) -> Vec<StepEvent> {
        advance(&mut self.state, &self.geometry, dt)
    }

    /// Advances to absolute time `t` (no-op if already there).
    pub fn advance_to(&mut self, t: f64) -> Vec<StepEvent> {
        let dt = t - self.state.clock;
        if dt > 0.0 {
            self.advance(dt)
        } else {
            Vec::new()
        }
    }

    /// Pan steps that would aim at `azimuth`, clamped to the pan limits.
    pub fn pan_steps_for(&self, azimuth: f64) -> i64 {
        let (lo, hi) = self.geometry.pan_step_limits();
        self.geometry.pan_motor.angle_to_steps(azimuth).clamp(lo, hi)
    }

    /// Tilt steps (or servo units) that would aim at `elevation`, clamped.
    pub fn tilt_steps_for(&self, elevation: f64) -> i64 {
        let per_step = match self.geometry.tilt {
            TiltDrive::Stepper { motor } => motor.degrees_per_step(),
            TiltDrive::Servo { unit, .. } => unit,
        };
        let (lo, hi) = step_limits(self.geometry.tilt_limits, per_step);
        ((elevation / per_step).round() as i64).clamp(lo, hi)
    }

    /// Commands the pan motor to an absolute step position (clamped).
    pub fn move_pan(&mut self, steps: i64) {
        let (lo, hi) = self.geometry.pan_step_limits();
        let now = self.state.clock;
        self.state.pan.set_target(steps.clamp(lo, hi), now);
    }

    /// Commands the tilt axis to an absolute position in steps or units.
    pub fn move_tilt(&mut self, steps: i64) {
        let per_step = match self.geometry.tilt {
            TiltDrive::Stepper { motor } => motor.degrees_per_step(),
            TiltDrive::Servo { unit, .. } => unit,
        };
        let (lo, hi) = step_limits(self.geometry.tilt_limits, per_step);
        let now = self.state.clock;
        match &mut self.state.tilt {
            TiltAxis::Stepper(m) => m.set_target(steps.clamp(lo, hi), now),
            TiltAxis::Servo(s) => s.setpoint = steps.clamp(lo, hi) as f64,
        }
    }

    pub fn snapshot(&self) -> RigSnapshot {
        let (azimuth, elevation) = self.orientation();
        let tilt_state = match &self.state.tilt {
            TiltAxis::Stepper(m) => m.state(),
            TiltAxis::Servo(s) if s.position == s.setpoint => MotorState::Stopped,
            TiltAxis::Servo(_) => MotorState::Cruise,
        };
        RigSnapshot {
            rig: self.id,
            azimuth,
            elevation,
            pan_steps: self.state.pan_steps(),
            tilt_steps: self.state.tilt_steps(),
            pan_state: self.state.pan.state(),
            tilt_state,
        }
    }

    /// Unit vectors of the rig's own frame in room coordinates:
    /// (left, up, forward).
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let (az, el) = self.orientation();
        let (sa, ca) = az.to_radians().sin_cos();
        let (se, ce) = el.to_radians().sin_cos();
        let forward = Vec3::new(sa * ce, se, -ca * ce);
        let up = Vec3::new(-sa * se, ce, ca * se);
        let left = Vec3::new(-ca, 0.0, -sa);
        (left, up, forward)
    }

    /// Maps a point from this rig's sensor frame (x toward the rig's left,
    /// y up, z forward) into the room.
    pub fn sensor_to_room(&self, p: Vec3) -> Vec3 {
        let (left, up, forward) = self.basis();
        self.geometry.mount_position + left * p.x + up * p.y + forward * p.z
    }

    pub fn room_to_sensor(&self, p: Vec3) -> Vec3 {
        let (left, up, forward) = self.basis();
        let d = p - self.geometry.mount_position;
        let dot = |a: Vec3, b: Vec3| a.x * b.x + a.y * b.y + a.z * b.z;
        Vec3::new(dot(d, left), dot(d, up), dot(d, forward))
    }
}
