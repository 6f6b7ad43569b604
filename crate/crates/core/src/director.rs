//! Scene director: turns gesture commands into camera targets and recorder
//! state, keeps both rigs on the speaker, and drives the LED panel.

use serde::{Deserialize, Serialize};

use crate::gesture::{GestureEvent, PoseLabel};
use crate::rig::{angle_diff, Rig, RigId};
use crate::skeleton::{JointId, SkeletonFrame, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneMode {
    #[serde(rename = "follow")]
    FollowSpeaker,
    Blackboard,
    Canvas,
}

impl SceneMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SceneMode::FollowSpeaker => "follow",
            SceneMode::Blackboard => "blackboard",
            SceneMode::Canvas => "canvas",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "follow" => Some(SceneMode::FollowSpeaker),
            "blackboard" => Some(SceneMode::Blackboard),
            "canvas" => Some(SceneMode::Canvas),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aim {
    pub azimuth: f64,
    pub elevation: f64,
}

/// Install-time camera presets for the two fixed scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Presets {
    pub blackboard: Aim,
    pub canvas: Aim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LedPanel {
    pub power: bool,
    pub command_window: bool,
    pub follow: bool,
    pub blackboard: bool,
    pub canvas: bool,
}

impl LedPanel {
    /// Wire mask: bit 0 power through bit 4 canvas.
    pub fn mask(&self) -> u8 {
        u8::from(self.power)
            | u8::from(self.command_window) << 1
            | u8::from(self.follow) << 2
            | u8::from(self.blackboard) << 3
            | u8::from(self.canvas) << 4
    }

    pub fn from_mask(mask: u8) -> Self {
        Self {
            power: mask & 1 != 0,
            command_window: mask & 2 != 0,
            follow: mask & 4 != 0,
            blackboard: mask & 8 != 0,
            canvas: mask & 16 != 0,
        }
    }
}

/// Axis move requested of a rig, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigCommand {
    pub rig: RigId,
    pub azimuth: Option<f64>,
    pub elevation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentAction {
    Start,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirectorConfig {
    pub deadband: f64,
    /// Minimum seconds between two retargets of the same rig.
    pub retarget_interval: f64,
}

impl Default for DirectorConfig {
    fn default() -> Self {
        Self { deadband: 5.0, retarget_interval: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectorState {
    pub mode: SceneMode,
    pub recording: bool,
    pub deadband: f64,
    pub retarget_interval: f64,
    last_retarget: [Option<f64>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GestureOutcome {
    pub commands: Vec<RigCommand>,
    pub leds: LedPanel,
    pub segment: Option<SegmentAction>,
}

impl DirectorState {
    pub fn new(cfg: &DirectorConfig) -> Self {
        Self {
            mode: SceneMode::FollowSpeaker,
            recording: false,
            deadband: cfg.deadband,
            retarget_interval: cfg.retarget_interval,
            last_retarget: [None, None],
        }
    }

    /// Applies a recognized command. S1 is never retargeted here: it keeps
    /// following the speaker regardless of scene.
    pub fn on_gesture(&mut self, event: &GestureEvent, presets: &Presets) -> GestureOutcome {
        let mut commands = Vec::new();
        let mut segment = None;
        match event.label {
            PoseLabel::ToggleRecord => {
                self.recording = !self.recording;
                segment = Some(if self.recording { SegmentAction::Start } else { SegmentAction::Stop });
            }
            PoseLabel::Blackboard => {
                self.mode = SceneMode::Blackboard;
                commands.push(preset_command(presets.blackboard));
            }
            PoseLabel::Canvas => {
                self.mode = SceneMode::Canvas;
                commands.push(preset_command(presets.canvas));
            }
            PoseLabel::Speaker => {
                self.mode = SceneMode::FollowSpeaker;
                // Forget the rate limit so S2 reacquires on the next frame.
                self.last_retarget[1] = None;
            }
            PoseLabel::Undefined => {}
        }
        GestureOutcome { commands, leds: led_state(self, false), segment }
    }

    /// Tracking control for one skeleton frame. `s1` supplies the sensor pose
    /// needed to place the skeleton in the room.
    pub fn on_skeleton(&mut self, frame: &SkeletonFrame, s1: &Rig, s2: &Rig) -> Vec<RigCommand> {
        let mut commands = Vec::new();
        let Some(target) = SpeakerTarget::locate(frame, s1) else {
            return commands;
        };
        let t = frame.t();

        if let Some(cmd) = self.track(RigId::S1, s1, target.torso, None, t) {
            commands.push(cmd);
        }
        if self.mode == SceneMode::FollowSpeaker {
            if let Some(cmd) = self.track(RigId::S2, s2, target.torso, Some(target.head), t) {
                commands.push(cmd);
            }
        }
        commands
    }

    fn track(&mut self, id: RigId, rig: &Rig, torso: Vec3, head: Option<Vec3>, t: f64) -> Option<RigCommand> {
        let slot = match id {
            RigId::S1 => 0,
            RigId::S2 => 1,
        };
        if let Some(last) = self.last_retarget[slot] {
            if t - last < self.retarget_interval - 1e-9 {
                return None;
            }
        }
        let (cur_az, cur_el) = rig.orientation();
        let (az, _) = rig.bearing_to(torso).ok()?;
        let pan = (angle_diff(az, cur_az).abs() > self.deadband).then_some(az);
        let tilt = match head {
            Some(h) => {
                let (_, el) = rig.bearing_to(h).ok()?;
                ((el - cur_el).abs() > self.deadband).then_some(el)
            }
            None => None,
        };
        if pan.is_none() && tilt.is_none() {
            return None;
        }
        self.last_retarget[slot] = Some(t);
        Some(RigCommand { rig: id, azimuth: pan, elevation: tilt })
    }
}

fn preset_command(aim: Aim) -> RigCommand {
    RigCommand { rig: RigId::S2, azimuth: Some(aim.azimuth), elevation: Some(aim.elevation) }
}

/// LED panel for a director state; `hint` is the gesture timer's
/// command-window flag.
pub fn led_state(state: &DirectorState, hint: bool) -> LedPanel {
    LedPanel {
        power: true,
        command_window: hint,
        follow: state.mode == SceneMode::FollowSpeaker,
        blackboard: state.mode == SceneMode::Blackboard,
        canvas: state.mode == SceneMode::Canvas,
    }
}

/// Speaker reference points in room coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeakerTarget {
    /// Midpoint of shoulder-center and spine; drives azimuth.
    pub torso: Vec3,
    /// Drives camera elevation.
    pub head: Vec3,
}

impl SpeakerTarget {
    /// Locates the speaker from a sensor-frame skeleton seen by `s1`, or
    /// `None` when nobody is tracked.
    pub fn locate(frame: &SkeletonFrame, s1: &Rig) -> Option<Self> {
        if !frame.person_present() {
            return None;
        }
        let neck = frame.joint(JointId::ShoulderCenter);
        let spine = frame.joint(JointId::Spine);
        let head = frame.joint(JointId::Head);
        if [neck, spine, head].iter().any(|j| j.track == crate::skeleton::TrackState::NotTracked) {
            return None;
        }
        let torso = neck.position.midpoint(spine.position);
        Some(Self { torso: s1.sensor_to_room(torso), head: s1.sensor_to_room(head.position) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::MotionProfile;
    use crate::rig::RigGeometry;

    fn presets() -> Presets {
        Presets {
            blackboard: Aim { azimuth: -20.0, elevation: 5.0 },
            canvas: Aim { azimuth: 18.0, elevation: 8.0 },
        }
    }

    fn event(label: PoseLabel) -> GestureEvent {
        GestureEvent { label, fired_at: 3.0, held_for: 2.0 }
    }

    fn rigs() -> (Rig, Rig) {
        let p = MotionProfile::default();
        (Rig::new(RigId::S1, RigGeometry::default_s1(), &p), Rig::new(RigId::S2, RigGeometry::default_s2(), &p))
    }

    /// Skeleton whose torso midpoint sits `bearing` degrees off the S1
    /// boresight, at mount height, 3 m away.
    fn speaker_at(t: f64, bearing: f64) -> SkeletonFrame {
        let (s, c) = bearing.to_radians().sin_cos();
        let torso = Vec3::new(-3.0 * s, 0.0, 3.0 * c);
        let mut p = [torso; 20];
        p[JointId::ShoulderCenter.index()] = torso + Vec3::new(0.0, 0.125, 0.0);
        p[JointId::Spine.index()] = torso - Vec3::new(0.0, 0.125, 0.0);
        p[JointId::Head.index()] = torso + Vec3::new(0.0, 0.3, 0.0);
        SkeletonFrame::from_positions(t, true, &p).unwrap()
    }

    #[test]
    fn toggle_starts_then_stops() {
        let mut d = DirectorState::new(&DirectorConfig::default());
        let out = d.on_gesture(&event(PoseLabel::ToggleRecord), &presets());
        assert!(d.recording);
        assert_eq!(out.segment, Some(SegmentAction::Start));
        let out = d.on_gesture(&event(PoseLabel::ToggleRecord), &presets());
        assert!(!d.recording);
        assert_eq!(out.segment, Some(SegmentAction::Stop));
    }

    #[test]
    fn canvas_moves_s2_to_preset() {
        let mut d = DirectorState::new(&DirectorConfig::default());
        let out = d.on_gesture(&event(PoseLabel::Canvas), &presets());
        assert_eq!(d.mode, SceneMode::Canvas);
        assert_eq!(
            out.commands,
            vec![RigCommand { rig: RigId::S2, azimuth: Some(18.0), elevation: Some(8.0) }]
        );
        assert!(out.leds.canvas && !out.leds.follow && !out.leds.blackboard && out.leds.power);
    }

    #[test]
    fn speaker_sets_follow() {
        let mut d = DirectorState::new(&DirectorConfig::default());
        d.on_gesture(&event(PoseLabel::Blackboard), &presets());
        let out = d.on_gesture(&event(PoseLabel::Speaker), &presets());
        assert_eq!(d.mode, SceneMode::FollowSpeaker);
        assert!(out.leds.follow);
        assert!(out.commands.is_empty());
    }

    #[test]
    fn on_boresight_no_s1_command() {
        let (s1, s2) = rigs();
        let mut d = DirectorState::new(&DirectorConfig::default());
        let cmds = d.on_skeleton(&speaker_at(0.0, 0.0), &s1, &s2);
        assert!(cmds.iter().all(|c| c.rig != RigId::S1));
    }

    #[test]
    fn ten_degrees_off_commands_s1() {
        let (s1, s2) = rigs();
        let mut d = DirectorState::new(&DirectorConfig::default());
        let cmds = d.on_skeleton(&speaker_at(0.0, -10.0), &s1, &s2);
        let c = cmds.iter().find(|c| c.rig == RigId::S1).expect("S1 command");
        assert!((c.azimuth.unwrap() + 10.0).abs() < 1e-9);
        assert_eq!(c.elevation, None);
    }

    #[test]
    fn non_follow_mode_gates_s2() {
        let (s1, s2) = rigs();
        let mut d = DirectorState::new(&DirectorConfig::default());
        d.on_gesture(&event(PoseLabel::Canvas), &presets());
        let cmds = d.on_skeleton(&speaker_at(0.0, 15.0), &s1, &s2);
        assert!(cmds.iter().any(|c| c.rig == RigId::S1));
        assert!(cmds.iter().all(|c| c.rig != RigId::S2));
    }

    #[test]
    fn absent_speaker_holds() {
        let (s1, s2) = rigs();
        let mut d = DirectorState::new(&DirectorConfig::default());
        assert!(d.on_skeleton(&SkeletonFrame::absent(0.0), &s1, &s2).is_empty());
    }

    #[test]
    fn retargets_are_rate_limited() {
        let (s1, s2) = rigs();
        let mut d = DirectorState::new(&DirectorConfig::default());
        assert!(!d.on_skeleton(&speaker_at(0.0, 12.0), &s1, &s2).is_empty());
        assert!(d.on_skeleton(&speaker_at(0.1, 12.0), &s1, &s2).is_empty());
        assert!(!d.on_skeleton(&speaker_at(0.2, 12.0), &s1, &s2).is_empty());
    }

    #[test]
    fn led_panels() {
        let mut d = DirectorState::new(&DirectorConfig::default());
        let p = led_state(&d, false);
        assert_eq!(p, LedPanel { power: true, follow: true, ..LedPanel::default() });
        d.mode = SceneMode::Canvas;
        let p = led_state(&d, true);
        assert_eq!(p, LedPanel { power: true, canvas: true, command_window: true, ..LedPanel::default() });
        assert_eq!(LedPanel::from_mask(p.mask()), p);
        assert_eq!(LedPanel { power: true, ..LedPanel::default() }.mask(), 0b00001);
    }
}
