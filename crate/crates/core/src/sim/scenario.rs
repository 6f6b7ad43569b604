//! End-to-end simulation: skeleton frames drive the gesture timer and
//! director, whose commands travel as encoded frames to a virtual motor
//! controller, while the recorder logs the scene at 25 fps.
//!
//! Time advances on a 1 ms grid. Skeleton frames are processed on the first
//! millisecond at or after their timestamp.

use std::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::body::{NoiseModel, Pose};
use super::corpus::{generate_script, Area, CorpusSpec, TruthWindow};
use super::script::{Placement, ScriptBuilder, SpeakerScript};
use crate::config::{ConfigError, SystemConfig};
use crate::director::{led_state, DirectorState, LedPanel, Presets, RigCommand, SegmentAction, SpeakerTarget};
use crate::gesture::{GestureError, GestureEvent, HoldTimer, PoseLabel};
use crate::motion::{build_profile, MotorFsm, StepEvent};
use crate::protocol::wire::{encode, ControlFrame, FrameDecoder, ProtocolError};
use crate::rig::{angle_diff, Rig, RigId, TiltAxis, MOTOR_S1_PAN, MOTOR_S2_PAN, MOTOR_S2_TILT};
use crate::session::{expected_ticks, SceneTick, SessionEdl, SessionError, GRID_TOLERANCE};
use crate::skeleton::{JointId, SkeletonError, SkeletonFrame, Trace, Vec3};

/// Motion clock period in seconds.
pub const CLOCK_DT: f64 = 0.001;
/// Interval between controller status polls.
const STATUS_PERIOD: f64 = 1.0;
/// Depth range over which the sensor reports a skeleton.
const SENSOR_RANGE: (f64, f64) = (0.8, 4.5);

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gesture(#[from] GestureError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error("duration must be finite and non-negative, got {0}")]
    BadDuration(f64),
}

// ── Virtual controller ─────────────────────────────────────

/// The motor controller board: owns both rigs' motors and the LED panel and
/// obeys only what arrives over the link.
#[derive(Debug, Clone)]
pub struct VirtualController {
    s1: Rig,
    s2: Rig,
    decoder: FrameDecoder,
    leds: u8,
    table_len: usize,
    replies: Vec<u8>,
    rejected: usize,
}

impl VirtualController {
    pub fn new(config: &SystemConfig) -> Result<Self, ConfigError> {
        let profile = config.motion.profile()?;
        Ok(Self {
            s1: Rig::new(RigId::S1, config.s1.clone(), &profile),
            s2: Rig::new(RigId::S2, config.s2.clone(), &profile),
            decoder: FrameDecoder::new(),
            leds: 0,
            table_len: config.motion.table_len,
            replies: Vec::new(),
            rejected: 0,
        })
    }

    pub fn s1(&self) -> &Rig {
        &self.s1
    }

    pub fn s2(&self) -> &Rig {
        &self.s2
    }

    pub fn leds(&self) -> u8 {
        self.leds
    }

    /// Frames that failed to decode or could not be applied.
    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn advance_to(&mut self, t: f64) -> Vec<StepEvent> {
        let mut ev = self.s1.advance_to(t);
        ev.extend(self.s2.advance_to(t));
        ev
    }

    pub fn receive(&mut self, bytes: &[u8]) {
        self.decoder.push(bytes);
        while let Some(res) = self.decoder.next_frame() {
            match res {
                Ok(frame) => self.apply(frame),
                Err(_) => self.rejected += 1,
            }
        }
    }

    /// Bytes sent back to the host since the last call.
    pub fn take_replies(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.replies)
    }

    fn motor(&mut self, motor: u8) -> Option<&mut MotorFsm> {
        match motor {
            MOTOR_S1_PAN => Some(&mut self.s1.state.pan),
            MOTOR_S2_PAN => Some(&mut self.s2.state.pan),
            MOTOR_S2_TILT => match &mut self.s2.state.tilt {
                TiltAxis::Stepper(m) => Some(m),
                TiltAxis::Servo(_) => None,
            },
            _ => None,
        }
    }

    fn apply(&mut self, frame: ControlFrame) {
        match frame {
            ControlFrame::MoveAbs { motor, steps } => self.move_to(motor, steps as i64),
            ControlFrame::MoveRel { motor, steps } => match self.motor(motor).map(|m| m.target()) {
                Some(target) => self.move_to(motor, target + steps as i64),
                None => self.rejected += 1,
            },
            ControlFrame::Stop { motor } => match self.motor(motor) {
                Some(m) => m.stop(),
                None => self.rejected += 1,
            },
            ControlFrame::SetProfile { motor, v_min, v_max } => {
                let n = self.table_len;
                match (build_profile(v_min as f64, v_max as f64, n), self.motor(motor)) {
                    (Ok(p), Some(m)) => m.set_profile(p),
                    _ => self.rejected += 1,
                }
            }
            ControlFrame::LedSet { mask } => self.leds = mask,
            ControlFrame::StatusReq { motor } => {
                let status = self.motor(motor).map(|m| ControlFrame::Status {
                    motor,
                    position: m.position().clamp(i16::MIN as i64, i16::MAX as i64) as i16,
                    state: m.state().code(),
                });
                match status.map(|s| encode(&s)) {
                    Some(Ok(bytes)) => self.replies.extend(bytes),
                    _ => self.rejected += 1,
                }
            }
            ControlFrame::Status { .. } => self.rejected += 1,
        }
    }

    fn move_to(&mut self, motor: u8, steps: i64) {
        match motor {
            MOTOR_S1_PAN => self.s1.move_pan(steps),
            MOTOR_S2_PAN => self.s2.move_pan(steps),
            MOTOR_S2_TILT => self.s2.move_tilt(steps),
            _ => self.rejected += 1,
        }
    }
}

// ── Logs ───────────────────────────────────────────────────

/// Rig orientations at one skeleton frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigLogEntry {
    pub t: f64,
    pub s1: (f64, f64),
    pub s2: (f64, f64),
    pub label: PoseLabel,
    /// Bearing from S1 to the perceived speaker torso.
    pub target_azimuth: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirectorLogKind {
    Gesture { event: GestureEvent },
    Command { command: RigCommand },
    Segment { action: SegmentAction },
    Leds { mask: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectorLogEntry {
    pub t: f64,
    #[serde(flatten)]
    pub kind: DirectorLogKind,
}

/// S1 pointing error against the true speaker position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingSample {
    pub t: f64,
    /// Speaker reported by the sensor on this frame.
    pub present: bool,
    /// True torso bearing minus S1 azimuth, degrees.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioLogs {
    pub rig: Vec<RigLogEntry>,
    pub director: Vec<DirectorLogEntry>,
    pub edl: SessionEdl,
    /// Host to controller bytes.
    pub wire_out: Vec<u8>,
    /// Controller to host bytes.
    pub wire_in: Vec<u8>,
    pub tracking: Vec<TrackingSample>,
    pub rejected_frames: usize,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl ScenarioLogs {
    pub fn rig_text(&self) -> String {
        let mut out = String::new();
        for e in &self.rig {
            let _ = writeln!(
                out,
                "t={} s1_az={} s1_el={} s2_az={} s2_el={} label={} target_az={}",
                e.t,
                e.s1.0,
                e.s1.1,
                e.s2.0,
                e.s2.1,
                e.label,
                opt(e.target_azimuth)
            );
        }
        out
    }

    pub fn director_text(&self) -> String {
        let mut out = String::new();
        for e in &self.director {
            let _ = match e.kind {
                DirectorLogKind::Gesture { event } => {
                    writeln!(out, "t={} gesture {} held={}", e.t, event.label, event.held_for)
                }
                DirectorLogKind::Command { command } => writeln!(
                    out,
                    "t={} command {:?} az={} el={}",
                    e.t,
                    command.rig,
                    opt(command.azimuth),
                    opt(command.elevation)
                ),
                DirectorLogKind::Segment { action } => writeln!(out, "t={} segment {action:?}", e.t),
                DirectorLogKind::Leds { mask } => writeln!(out, "t={} leds {mask:#04x}", e.t),
            };
        }
        out
    }

    pub fn gesture_events(&self) -> Vec<GestureEvent> {
        self.director
            .iter()
            .filter_map(|e| match e.kind {
                DirectorLogKind::Gesture { event } => Some(event),
                _ => None,
            })
            .collect()
    }

    pub fn segment_actions(&self) -> Vec<(f64, SegmentAction)> {
        self.director
            .iter()
            .filter_map(|e| match e.kind {
                DirectorLogKind::Segment { action } => Some((e.t, action)),
                _ => None,
            })
            .collect()
    }
}

// ── Engine ─────────────────────────────────────────────────

/// Host-side control loop bound to a virtual controller.
#[derive(Debug, Clone)]
pub struct Engine {
    config: SystemConfig,
    presets: Presets,
    controller: VirtualController,
    timer: HoldTimer,
    director: DirectorState,
    leds: LedPanel,
    target: Option<SpeakerTarget>,
    now: f64,
    next_status: f64,
    status_motor: u8,
    pub logs: ScenarioLogs,
}

impl Engine {
    pub fn new(config: &SystemConfig) -> Result<Self, ScenarioError> {
        config.validate()?;
        let director = DirectorState::new(&config.director);
        let mut engine = Self {
            config: config.clone(),
            presets: config.effective_presets()?,
            controller: VirtualController::new(config)?,
            timer: HoldTimer::new(),
            leds: led_state(&director, false),
            director,
            target: None,
            now: 0.0,
            next_status: STATUS_PERIOD,
            status_motor: 0,
            logs: ScenarioLogs::default(),
        };
        let (v_min, v_max) = config.motion.wire_speeds();
        for motor in [MOTOR_S1_PAN, MOTOR_S2_PAN, MOTOR_S2_TILT] {
            if engine.controller.motor(motor).is_some() {
                engine.send(ControlFrame::SetProfile { motor, v_min, v_max })?;
            }
        }
        engine.send(ControlFrame::LedSet { mask: engine.leds.mask() })?;
        Ok(engine)
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn controller(&self) -> &VirtualController {
        &self.controller
    }

    pub fn director(&self) -> &DirectorState {
        &self.director
    }

    pub fn leds(&self) -> LedPanel {
        self.leds
    }

    pub fn presets_mut(&mut self) -> &mut Presets {
        &mut self.presets
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    fn send(&mut self, frame: ControlFrame) -> Result<(), ScenarioError> {
        let bytes = encode(&frame)?;
        self.logs.wire_out.extend_from_slice(&bytes);
        self.controller.receive(&bytes);
        self.logs.wire_in.extend(self.controller.take_replies());
        self.logs.rejected_frames = self.controller.rejected();
        Ok(())
    }

    fn log(&mut self, kind: DirectorLogKind) {
        self.logs.director.push(DirectorLogEntry { t: self.now, kind });
    }

    fn send_command(&mut self, cmd: RigCommand) -> Result<(), ScenarioError> {
        self.log(DirectorLogKind::Command { command: cmd });
        let to_i16 = |v: i64| v.clamp(i16::MIN as i64, i16::MAX as i64) as i16;
        match cmd.rig {
            RigId::S1 => {
                if let Some(az) = cmd.azimuth {
                    let steps = to_i16(self.controller.s1.pan_steps_for(az));
                    self.send(ControlFrame::MoveAbs { motor: MOTOR_S1_PAN, steps })?;
                }
                // The sensor's tilt servo is driven through the sensor's own
                // interface rather than the controller link.
                if let Some(el) = cmd.elevation {
                    let units = self.controller.s1.tilt_steps_for(el);
                    self.controller.s1.move_tilt(units);
                }
            }
            RigId::S2 => {
                if let Some(az) = cmd.azimuth {
                    let steps = to_i16(self.controller.s2.pan_steps_for(az));
                    self.send(ControlFrame::MoveAbs { motor: MOTOR_S2_PAN, steps })?;
                }
                if let Some(el) = cmd.elevation {
                    let steps = to_i16(self.controller.s2.tilt_steps_for(el));
                    self.send(ControlFrame::MoveAbs { motor: MOTOR_S2_TILT, steps })?;
                }
            }
        }
        Ok(())
    }

    /// Moves the motion clock to `t` and services the periodic status poll.
    pub fn advance(&mut self, t: f64) -> Result<(), ScenarioError> {
        if t < self.now {
            return Ok(());
        }
        self.controller.advance_to(t);
        self.now = t;
        if t + 1e-9 >= self.next_status {
            let motor = self.status_motor;
            self.status_motor = (motor + 1) % 3;
            self.next_status += STATUS_PERIOD;
            self.send(ControlFrame::StatusReq { motor })?;
        }
        Ok(())
    }

    fn speaker_in_s2_view(&self) -> bool {
        self.target.is_some_and(|tg| self.controller.s2.in_fov(tg.torso))
    }

    fn scene_tick(&self, t: f64) -> SceneTick {
        let (az, el) = self.controller.s2.orientation();
        SceneTick {
            t,
            mode: self.director.mode,
            s2_azimuth: az,
            s2_elevation: el,
            speaker_in_fov: self.speaker_in_s2_view(),
        }
    }

    /// Logs every recorder tick due by the current time.
    pub fn log_ticks(&mut self) -> Result<(), ScenarioError> {
        while let Some(t) = self.logs.edl.next_tick_time() {
            if t > self.now + GRID_TOLERANCE {
                break;
            }
            let tick = self.scene_tick(t);
            self.logs.edl.log_tick(tick)?;
        }
        Ok(())
    }

    fn close_segment(&mut self, stop: f64) -> Result<(), ScenarioError> {
        let Some(seg) = self.logs.edl.open_segment() else {
            return Ok(());
        };
        let want = expected_ticks(seg.start, stop);
        while self.logs.edl.open_segment().is_some_and(|s| s.ticks.len() < want) {
            let t = self.logs.edl.next_tick_time().expect("segment is open");
            let tick = self.scene_tick(t);
            self.logs.edl.log_tick(tick)?;
        }
        self.logs.edl.stop_segment(stop)?;
        Ok(())
    }

    /// Runs the control loop on one sensor frame. `truth` is the real torso
    /// position, when known, for tracking statistics.
    pub fn process_frame(&mut self, frame: &SkeletonFrame, truth: Option<Vec3>) -> Result<(), ScenarioError> {
        let gcfg = self.config.gesture.clone();
        let label = crate::gesture::classify_pose(frame, &gcfg);
        if let Some(event) = self.timer.update_label(frame.t(), label, &gcfg)? {
            self.log(DirectorLogKind::Gesture { event });
            let outcome = self.director.on_gesture(&event, &self.presets);
            for cmd in outcome.commands {
                self.send_command(cmd)?;
            }
            match outcome.segment {
                Some(SegmentAction::Start) => {
                    self.logs.edl.start_segment(event.fired_at)?;
                    self.log(DirectorLogKind::Segment { action: SegmentAction::Start });
                    self.log_ticks()?;
                }
                Some(SegmentAction::Stop) => {
                    self.close_segment(event.fired_at)?;
                    self.log(DirectorLogKind::Segment { action: SegmentAction::Stop });
                }
                None => {}
            }
        }

        let leds = led_state(&self.director, self.timer.led_hint(&gcfg));
        if leds != self.leds {
            self.leds = leds;
            self.log(DirectorLogKind::Leds { mask: leds.mask() });
            self.send(ControlFrame::LedSet { mask: leds.mask() })?;
        }

        let commands = self.director.on_skeleton(frame, &self.controller.s1, &self.controller.s2);
        for cmd in commands {
            self.send_command(cmd)?;
        }

        self.target = SpeakerTarget::locate(frame, &self.controller.s1);
        let target_azimuth = self.target.and_then(|tg| self.controller.s1.bearing_to(tg.torso).ok()).map(|b| b.0);
        self.logs.rig.push(RigLogEntry {
            t: frame.t(),
            s1: self.controller.s1.orientation(),
            s2: self.controller.s2.orientation(),
            label,
            target_azimuth,
        });
        if let Some(p) = truth {
            if let Ok((az, _)) = self.controller.s1.bearing_to(p) {
                let error = angle_diff(az, self.controller.s1.orientation().0);
                self.logs.tracking.push(TrackingSample { t: frame.t(), present: frame.person_present(), error });
            }
        }
        Ok(())
    }

    /// Closes any open segment at the current time and returns the logs.
    pub fn finish(mut self) -> Result<ScenarioLogs, ScenarioError> {
        if self.logs.edl.is_recording() {
            let stop = self.now;
            if self.logs.edl.open_segment().is_some_and(|s| stop > s.start) {
                self.close_segment(stop)?;
            } else {
                self.logs.edl.segments.pop();
            }
            self.log(DirectorLogKind::Segment { action: SegmentAction::Stop });
        }
        Ok(self.logs)
    }
}

// ── Speaker rendering ──────────────────────────────────────

/// Room-frame joints of a speaker standing at `place` and facing `toward`.
pub fn room_joints(place: &Placement, toward: Vec3) -> [Vec3; JointId::COUNT] {
    let hip = place.hip(0.0);
    let (dx, dz) = (toward.x - hip.x, toward.z - hip.z);
    let len = dx.hypot(dz).max(1e-9);
    let (fx, fz) = (dx / len, dz / len);
    let right = Vec3::new(-fz, 0.0, fx);
    let back = Vec3::new(-fx, 0.0, -fz);
    let up = Vec3::new(0.0, 1.0, 0.0);
    place.body().map(|o| hip + right * o.x + up * o.y + back * o.z)
}

/// Torso reference point (between shoulder center and spine) in the room.
pub fn room_torso(joints: &[Vec3; JointId::COUNT]) -> Vec3 {
    joints[JointId::ShoulderCenter.index()].midpoint(joints[JointId::Spine.index()])
}

/// What the S1 sensor reports for a speaker with the given room joints.
pub fn sense<R: rand::Rng>(
    s1: &Rig,
    joints: &[Vec3; JointId::COUNT],
    t: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<SkeletonFrame, SkeletonError> {
    let sensor = joints.map(|p| s1.room_to_sensor(p));
    let torso = room_torso(joints);
    let depth = s1.room_to_sensor(torso).z;
    let present = s1.in_fov(torso) && (SENSOR_RANGE.0..=SENSOR_RANGE.1).contains(&depth);
    if !present {
        return Ok(SkeletonFrame::absent(t));
    }
    noise.apply(rng, t, true, &sensor)
}

// ── Scenarios ──────────────────────────────────────────────

/// A speaker script in room floor coordinates, rendered through S1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub script: SpeakerScript,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Skeleton frame rate.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioInput {
    Trace(Trace),
    Script(ScenarioScript),
}

/// Runs a complete deterministic simulation for `duration` seconds.
pub fn run_scenario(config: &SystemConfig, input: &ScenarioInput, duration: f64) -> Result<ScenarioLogs, ScenarioError> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(ScenarioError::BadDuration(duration));
    }
    let mut engine = Engine::new(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(match input {
        ScenarioInput::Script(s) => s.seed,
        ScenarioInput::Trace(_) => 0,
    });
    let frame_time = |k: usize| -> Option<f64> {
        match input {
            ScenarioInput::Trace(tr) => tr.frames().get(k).map(|f| f.t()),
            ScenarioInput::Script(s) => Some(k as f64 / s.rate),
        }
    };
    let mut k = 0usize;
    let ticks = (duration / CLOCK_DT).round() as u64;
    for ms in 0..=ticks {
        let t = ms as f64 * CLOCK_DT;
        engine.advance(t)?;
        while let Some(tf) = frame_time(k).filter(|tf| *tf <= t + 1e-9 && *tf <= duration + 1e-9) {
            match input {
                ScenarioInput::Trace(tr) => engine.process_frame(&tr.frames()[k], None)?,
                ScenarioInput::Script(s) => {
                    let place = s.script.at(tf).expect("script has keys");
                    let joints = room_joints(&place, engine.controller.s1.geometry.mount_position);
                    let frame = sense(&engine.controller.s1, &joints, tf, &s.noise, &mut rng)?;
                    engine.process_frame(&frame, Some(room_torso(&joints)))?;
                }
            }
            k += 1;
        }
        engine.log_ticks()?;
    }
    engine.finish()
}

/// Speaker walk along the front of the room at `z`: from the middle to
/// `x0`, across to `x1` and back to the middle at `speed`, with a recording
/// toggle at each end so the session has content.
pub fn tracking_walk(x0: f64, x1: f64, z: f64, speed: f64) -> SpeakerScript {
    let mid = (x0 + x1) / 2.0;
    let mut b = ScriptBuilder::new(mid, z);
    b.hold(2.0).pose(Pose::Toggle, 0.4).hold(2.4).pose(Pose::Neutral, 0.4).hold(1.0);
    b.walk_to(x0, z, speed).walk_to(x1, z, speed).walk_to(mid, z, speed);
    b.hold(1.0).pose(Pose::Toggle, 0.4).hold(2.4).pose(Pose::Neutral, 0.4).hold(2.0);
    b.build()
}

/// A lecture of randomized length with the default corpus mix of gesture
/// instances, performed across the front of the room.
pub fn class_script(spec: &CorpusSpec, room_width: f64, seed: u64) -> (SpeakerScript, Vec<TruthWindow>) {
    let spec = CorpusSpec {
        area: Area { x0: 1.0, x1: room_width - 1.0, z0: 1.0, z1: 2.5 },
        ..spec.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let session = generate_script(&spec, &mut rng);
    (session.script, session.truth)
}
