//! Stepper motion: sigmoid speed ramps stored as delay tables, and the
//! four-state speed machine that walks a motor to its target.
//!
//! The machine keeps a ramp level `r` in `0..=N`. Accelerating at level `r`
//! waits `table[r]` before the next step and then raises the level;
//! decelerating at level `r` waits `table[r - 1]` and then lowers it. A move
//! from rest of `D` steps therefore waits
//! `table[min(k, D - 1 - k, N - 1)]` before step `k`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MotionError {
    #[error("invalid speeds: v_min={v_min}, v_max={v_max}")]
    BadSpeeds { v_min: f64, v_max: f64 },
    #[error("profile needs at least 2 entries, got {0}")]
    TooShort(usize),
    #[error("tick at {now} precedes previous tick at {prev}")]
    TimeRegression { prev: f64, now: f64 },
}

/// Slope of the logistic curve across the normalized table index.
const SIGMOID_SLOPE: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionProfile {
    table: Vec<f64>,
    v_min: f64,
    v_max: f64,
}

/// Builds the acceleration half of a sigmoid ramp as inter-step delays in
/// seconds, slowest first. The end entries are exactly `1/v_min` and
/// `1/v_max`.
pub fn build_profile(v_min: f64, v_max: f64, n: usize) -> Result<MotionProfile, MotionError> {
    if !(v_min > 0.0 && v_max >= v_min && v_max.is_finite()) {
        return Err(MotionError::BadSpeeds { v_min, v_max });
    }
    if n < 2 {
        return Err(MotionError::TooShort(n));
    }
    let span = v_max - v_min;
    let mut table: Vec<f64> = (0..n)
        .map(|k| {
            let u = k as f64 / (n - 1) as f64;
            let s = 1.0 / (1.0 + (-SIGMOID_SLOPE * (u - 0.5)).exp());
            1.0 / (v_min + span * s)
        })
        .collect();
    table[0] = 1.0 / v_min;
    table[n - 1] = 1.0 / v_max;
    Ok(MotionProfile { table, v_min, v_max })
}

impl MotionProfile {
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Largest ratio between two adjacent table entries.
    pub fn max_adjacent_ratio(&self) -> f64 {
        self.table.windows(2).map(|w| w[0] / w[1]).fold(1.0, f64::max)
    }
}

impl Default for MotionProfile {
    fn default() -> Self {
        build_profile(100.0, 1000.0, 64).expect("default profile is valid")
    }
}

// ── Speed machine ──────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotorState {
    Stopped,
    RampUp,
    Cruise,
    RampDown,
}

impl MotorState {
    pub fn code(self) -> u8 {
        match self {
            MotorState::Stopped => 0,
            MotorState::RampUp => 1,
            MotorState::Cruise => 2,
            MotorState::RampDown => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(MotorState::Stopped),
            1 => Some(MotorState::RampUp),
            2 => Some(MotorState::Cruise),
            3 => Some(MotorState::RampDown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub time: f64,
    pub motor: u8,
    pub direction: i8,
    /// Position after the step.
    pub position: i64,
    /// Machine state after the step.
    pub state: MotorState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotorFsm {
    motor: u8,
    profile: MotionProfile,
    state: MotorState,
    position: i64,
    target: i64,
    direction: i8,
    ramp_index: usize,
    next_step_at: Option<f64>,
    last_tick: Option<f64>,
}

impl MotorFsm {
    pub fn new(motor: u8, profile: MotionProfile) -> Self {
        Self {
            motor,
            profile,
            state: MotorState::Stopped,
            position: 0,
            target: 0,
            direction: 1,
            ramp_index: 0,
            next_step_at: None,
            last_tick: None,
        }
    }

    pub fn at_position(mut self, position: i64) -> Self {
        self.position = position;
        self.target = position;
        self
    }

    pub fn motor(&self) -> u8 {
        self.motor
    }

    pub fn state(&self) -> MotorState {
        self.state
    }

    pub fn position(&self) -> i64 {
        self.position
    }

    pub fn target(&self) -> i64 {
        self.target
    }

    pub fn direction(&self) -> i8 {
        self.direction
    }

    pub fn ramp_index(&self) -> usize {
        self.ramp_index
    }

    pub fn profile(&self) -> &MotionProfile {
        &self.profile
    }

    pub fn next_step_at(&self) -> Option<f64> {
        self.next_step_at
    }

    pub fn is_idle(&self) -> bool {
        self.state == MotorState::Stopped && self.position == self.target
    }

    /// Replaces the ramp table. Takes effect from the next scheduled step;
    /// the level is clamped to the new table length.
    pub fn set_profile(&mut self, profile: MotionProfile) {
        self.profile = profile;
        let n = self.profile.len();
        self.ramp_index = self.ramp_index.min(n);
        if self.state == MotorState::Cruise && self.ramp_index < n {
            self.state = MotorState::RampUp;
        }
    }

    /// Sets a new target at time `now`. Re-planning is always legal; a moving
    /// motor keeps its momentum and the ramp logic slows, stops, or reverses
    /// it as needed.
    pub fn set_target(&mut self, target: i64, now: f64) {
        self.target = target;
        if self.state == MotorState::Stopped {
            self.start_if_needed(now);
        }
    }

    /// Requests the fastest smooth stop. The step already scheduled still
    /// happens, so the motor comes to rest slightly ahead.
    pub fn stop(&mut self) {
        let distance = match self.state {
            MotorState::Stopped => 0,
            MotorState::RampUp => self.ramp_index + 1,
            MotorState::Cruise => self.profile.len() + 1,
            MotorState::RampDown => self.ramp_index,
        };
        self.target = self.position + self.direction as i64 * distance as i64;
    }

    fn start_if_needed(&mut self, now: f64) {
        debug_assert_eq!(self.state, MotorState::Stopped);
        if self.target == self.position {
            self.next_step_at = None;
            return;
        }
        self.direction = if self.target > self.position { 1 } else { -1 };
        self.state = MotorState::RampUp;
        self.ramp_index = 0;
        self.next_step_at = Some(now + self.current_delay());
    }

    fn current_delay(&self) -> f64 {
        let table = self.profile.table();
        let n = table.len();
        match self.state {
            MotorState::RampUp => table[self.ramp_index.min(n - 1)],
            MotorState::Cruise => table[n - 1],
            MotorState::RampDown => table[self.ramp_index.max(1) - 1],
            MotorState::Stopped => table[0],
        }
    }

    fn remaining(&self) -> i64 {
        (self.target - self.position) * self.direction as i64
    }

    /// Advances the machine to `now`, emitting the next step if it is due.
    /// Call repeatedly with the same `now` to drain every step due by then.
    pub fn tick(&mut self, now: f64) -> Result<Option<StepEvent>, MotionError> {
        if let Some(prev) = self.last_tick {
            if now < prev {
                return Err(MotionError::TimeRegression { prev, now });
            }
        }
        self.last_tick = Some(now);
        match self.next_step_at {
            Some(at) if at <= now => Ok(Some(self.step(at))),
            _ => Ok(None),
        }
    }

    fn step(&mut self, at: f64) -> StepEvent {
        let n = self.profile.len();
        let direction = self.direction;
        self.position += direction as i64;
        match self.state {
            MotorState::RampUp => self.ramp_index += 1,
            MotorState::RampDown => self.ramp_index -= 1,
            MotorState::Cruise | MotorState::Stopped => {}
        }

        let rem = self.remaining();
        let r = self.ramp_index as i64;
        self.state = match self.state {
            MotorState::RampDown if r == 0 => MotorState::Stopped,
            MotorState::RampDown if rem > r && self.ramp_index < n => MotorState::RampUp,
            MotorState::RampDown => MotorState::RampDown,
            MotorState::RampUp | MotorState::Cruise => {
                if rem >= 0 && rem == r - 1 {
                    // Odd-length turnaround: drop one level to land exactly.
                    self.ramp_index -= 1;
                    if rem == 0 {
                        MotorState::Stopped
                    } else {
                        MotorState::RampDown
                    }
                } else if rem <= r {
                    MotorState::RampDown
                } else if self.ramp_index >= n {
                    MotorState::Cruise
                } else {
                    MotorState::RampUp
                }
            }
            MotorState::Stopped => MotorState::Stopped,
        };

        let event = StepEvent { time: at, motor: self.motor, direction, position: self.position, state: self.state };
        if self.state == MotorState::Stopped {
            self.ramp_index = 0;
            self.next_step_at = None;
            self.start_if_needed(at);
        } else {
            self.next_step_at = Some(at + self.current_delay());
        }
        event
    }
}

// ── Schedules ──────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepSchedule {
    pub start: f64,
    pub events: Vec<StepEvent>,
}

impl StepSchedule {
    /// Delays before each step, the first measured from the schedule start.
    pub fn gaps(&self) -> Vec<f64> {
        let mut prev = self.start;
        self.events
            .iter()
            .map(|e| {
                let g = e.time - prev;
                prev = e.time;
                g
            })
            .collect()
    }

    pub fn end_position(&self) -> Option<i64> {
        self.events.last().map(|e| e.position)
    }
}

/// Runs a copy of `fsm` toward `target` until it comes to rest there and
/// returns every step it takes. Time starts at the machine's next scheduled
/// step reference (its last tick, or zero).
pub fn plan_move(fsm: &MotorFsm, target: i64, profile: &MotionProfile) -> StepSchedule {
    let mut sim = fsm.clone();
    let start = sim.last_tick.unwrap_or(0.0);
    if sim.profile != *profile {
        sim.set_profile(profile.clone());
    }
    sim.set_target(target, start);
    let mut events = Vec::new();
    while let Some(at) = sim.next_step_at {
        events.push(sim.step(at));
    }
    StepSchedule { start, events }
}

// ── Kinematics ─────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorGeometry {
    /// Degrees per full step.
    pub step_angle: f64,
    /// Motor turns per output turn.
    pub gear_ratio: f64,
}

impl Default for MotorGeometry {
    fn default() -> Self {
        Self { step_angle: 1.8, gear_ratio: 1.0 }
    }
}

impl MotorGeometry {
    pub fn degrees_per_step(&self) -> f64 {
        self.step_angle / self.gear_ratio
    }

    /// Nearest step count for an output angle.
    pub fn angle_to_steps(&self, degrees: f64) -> i64 {
        (degrees / self.degrees_per_step()).round() as i64
    }
}

pub fn steps_to_angle(steps: i64, geometry: &MotorGeometry) -> f64 {
    steps as f64 * geometry.step_angle / geometry.gear_ratio
}
