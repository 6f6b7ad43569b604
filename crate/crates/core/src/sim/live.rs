//! Interactive simulation driven by control-UI messages.

use std::collections::VecDeque;

use super::body::{NoiseModel, Pose};
use super::scenario::{room_joints, sense, DirectorLogKind, Engine, ScenarioError, CLOCK_DT};
use super::script::Placement;
use crate::config::SystemConfig;
use crate::director::SceneMode;
use crate::protocol::ui::{SegmentSummary, SimCommand, UiMessage};
use crate::skeleton::{parse_trace, SkeletonFrame};

const FRAME_RATE: f64 = 30.0;
/// Rig telemetry period.
const RIG_PERIOD: f64 = 0.1;
const MAX_POSE_SECONDS: f64 = 60.0;

/// One running simulation. The UI only ever sees state through the
/// messages this produces.
pub struct LiveSession {
    engine: Engine,
    running: bool,
    speaker: (f64, f64),
    pose: Option<(Pose, f64)>,
    trace: VecDeque<SkeletonFrame>,
    trace_offset: f64,
    injected: VecDeque<SkeletonFrame>,
    frame_k: u64,
    last_frame_t: f64,
    next_rig: f64,
    seen_director: usize,
    rng: rand_chacha::ChaCha8Rng,
}

impl LiveSession {
    pub fn new(config: &SystemConfig) -> Result<Self, ScenarioError> {
        use rand::SeedableRng;
        let room = config.room;
        Ok(Self {
            engine: Engine::new(config)?,
            running: true,
            speaker: (room.width / 2.0, 1.5),
            pose: None,
            trace: VecDeque::new(),
            trace_offset: 0.0,
            injected: VecDeque::new(),
            frame_k: 1,
            last_frame_t: -1.0,
            next_rig: 0.0,
            seen_director: 0,
            rng: rand_chacha::ChaCha8Rng::seed_from_u64(0),
        })
    }

    pub fn now(&self) -> f64 {
        self.engine.now()
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    /// Applies one inbound message and returns any immediate replies.
    pub fn handle(&mut self, msg: UiMessage) -> Vec<UiMessage> {
        match msg {
            UiMessage::Pose { name, duration } => {
                let Some(pose) = Pose::parse(&name) else {
                    return vec![UiMessage::error(format!("unknown pose `{name}`"))];
                };
                if !(duration > 0.0 && duration <= MAX_POSE_SECONDS) {
                    return vec![UiMessage::error(format!("pose duration must be in (0, {MAX_POSE_SECONDS}]"))];
                }
                self.pose = Some((pose, self.now() + duration));
                Vec::new()
            }
            UiMessage::Skeleton { frame } => {
                self.injected.push_back(frame);
                Vec::new()
            }
            UiMessage::Command { command } => self.command(command),
            other => vec![UiMessage::error(format!("the core does not accept `{}` messages", type_name(&other)))],
        }
    }

    fn command(&mut self, command: SimCommand) -> Vec<UiMessage> {
        match command {
            SimCommand::Start => self.running = true,
            SimCommand::Stop => self.running = false,
            SimCommand::LoadTrace { trace } => match parse_trace(trace.as_bytes()) {
                Ok(tr) => {
                    let first = tr.frames().first().map_or(0.0, |f| f.t());
                    self.trace_offset = self.now() - first + 1.0 / FRAME_RATE;
                    self.trace = tr.into_frames().into();
                }
                Err(e) => return vec![UiMessage::error(format!("trace rejected: {e}"))],
            },
            SimCommand::SetPreset { scene, azimuth, elevation } => {
                let (plo, phi) = self.engine.config().s2.pan_limits;
                let (tlo, thi) = self.engine.config().s2.tilt_limits;
                if !(plo..=phi).contains(&azimuth) || !(tlo..=thi).contains(&elevation) {
                    return vec![UiMessage::error("preset outside the camera rig's travel")];
                }
                let aim = crate::director::Aim { azimuth, elevation };
                match scene {
                    SceneMode::Blackboard => self.engine.presets_mut().blackboard = aim,
                    SceneMode::Canvas => self.engine.presets_mut().canvas = aim,
                    SceneMode::FollowSpeaker => return vec![UiMessage::error("the follow scene has no preset")],
                }
            }
            SimCommand::MoveSpeaker { x, z } => {
                let room = self.engine.config().room;
                if !(0.0..=room.width).contains(&x) || !(0.0..=room.depth).contains(&z) {
                    return vec![UiMessage::error("speaker position outside the room")];
                }
                self.speaker = (x, z);
            }
        }
        Vec::new()
    }

    fn next_frame(&mut self, t: f64) -> Result<Option<SkeletonFrame>, ScenarioError> {
        if let Some(f) = self.injected.pop_front() {
            return Ok(Some(f.with_time(t.max(self.last_frame_t))?));
        }
        if let Some(f) = self.trace.front() {
            if f.t() + self.trace_offset <= t + 1e-9 {
                let f = self.trace.pop_front().expect("front exists");
                return Ok(Some(f.with_time((f.t() + self.trace_offset).max(self.last_frame_t))?));
            }
            return Ok(None);
        }
        let due = self.frame_k as f64 / FRAME_RATE;
        if due > t + 1e-9 {
            return Ok(None);
        }
        self.frame_k += 1;
        let pose = match self.pose {
            Some((p, until)) if due < until => p,
            _ => Pose::Neutral,
        };
        let place = Placement { x: self.speaker.0, z: self.speaker.1, wrists: pose.wrists() };
        let s1 = self.engine.controller().s1();
        let joints = room_joints(&place, s1.geometry.mount_position);
        Ok(Some(sense(s1, &joints, due, &NoiseModel::NONE, &mut self.rng)?))
    }

    /// Advances simulated time by `dt` seconds on the motion clock and
    /// returns the telemetry produced meanwhile. Does nothing while stopped.
    pub fn step(&mut self, dt: f64) -> Result<Vec<UiMessage>, ScenarioError> {
        let mut out = Vec::new();
        if !self.running {
            return Ok(out);
        }
        let ticks = (dt / CLOCK_DT).round().max(0.0) as u64;
        let base = (self.now() / CLOCK_DT).round() as u64;
        for k in 1..=ticks {
            let t = (base + k) as f64 * CLOCK_DT;
            self.engine.advance(t)?;
            while let Some(frame) = self.next_frame(t)? {
                self.last_frame_t = frame.t();
                self.engine.process_frame(&frame, None)?;
                if self.frame_k % 3 == 0 {
                    out.push(UiMessage::Skeleton { frame });
                }
            }
            self.engine.log_ticks()?;
            self.drain_director(&mut out);
            if t + 1e-9 >= self.next_rig {
                self.next_rig = t + RIG_PERIOD;
                out.push(self.rig_message());
            }
        }
        Ok(out)
    }

    fn drain_director(&mut self, out: &mut Vec<UiMessage>) {
        let entries = self.engine.logs.director[self.seen_director..].to_vec();
        self.seen_director = self.engine.logs.director.len();
        for e in entries {
            match e.kind {
                DirectorLogKind::Gesture { event } => out.push(UiMessage::Gesture { event }),
                DirectorLogKind::Leds { mask } => out.push(UiMessage::Led {
                    t: e.t,
                    panel: crate::director::LedPanel::from_mask(mask),
                    mask,
                }),
                DirectorLogKind::Segment { .. } => out.push(self.edl_message()),
                DirectorLogKind::Command { .. } => out.push(self.rig_message()),
            }
        }
    }

    pub fn rig_message(&self) -> UiMessage {
        let c = self.engine.controller();
        UiMessage::Rig { t: self.now(), s1: c.s1().snapshot(), s2: c.s2().snapshot() }
    }

    pub fn edl_message(&self) -> UiMessage {
        let segments = self
            .engine
            .logs
            .edl
            .segments
            .iter()
            .map(|s| SegmentSummary { start: s.start, stop: s.stop, ticks: s.ticks.len() })
            .collect();
        UiMessage::Edl { recording: self.engine.director().recording, mode: self.engine.director().mode, segments }
    }

    /// Messages describing the full current state, for a newly connected UI.
    pub fn snapshot(&self) -> Vec<UiMessage> {
        let leds = self.engine.leds();
        vec![
            self.rig_message(),
            UiMessage::Led { t: self.now(), panel: leds, mask: leds.mask() },
            self.edl_message(),
        ]
    }
}

fn type_name(m: &UiMessage) -> &'static str {
    match m {
        UiMessage::Skeleton { .. } => "skeleton",
        UiMessage::Pose { .. } => "pose",
        UiMessage::Rig { .. } => "rig",
        UiMessage::Gesture { .. } => "gesture",
        UiMessage::Led { .. } => "led",
        UiMessage::Edl { .. } => "edl",
        UiMessage::Command { .. } => "command",
        UiMessage::Error { .. } => "error",
    }
}
