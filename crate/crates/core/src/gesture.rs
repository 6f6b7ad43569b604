//! Static arm-pose commands.
//!
//! A frame is labeled from the positions of both wrists relative to the
//! torso; a label held without interruption for `hold_min` seconds becomes a
//! [`GestureEvent`]. Short runs of other labels (tracking jitter) do not
//! interrupt a hold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::skeleton::{JointId, SkeletonFrame};

#[derive(Debug, Error, PartialEq)]
pub enum GestureError {
    #[error("frame time {t} precedes previous frame at {prev}")]
    TimeRegression { prev: f64, t: f64 },
    #[error("invalid gesture config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseLabel {
    ToggleRecord,
    Blackboard,
    Canvas,
    Speaker,
    Undefined,
}

impl PoseLabel {
    pub const COMMANDS: [PoseLabel; 4] =
        [PoseLabel::ToggleRecord, PoseLabel::Blackboard, PoseLabel::Canvas, PoseLabel::Speaker];

    pub fn as_str(self) -> &'static str {
        match self {
            PoseLabel::ToggleRecord => "toggle_record",
            PoseLabel::Blackboard => "blackboard",
            PoseLabel::Canvas => "canvas",
            PoseLabel::Speaker => "speaker",
            PoseLabel::Undefined => "undefined",
        }
    }
}

impl fmt::Display for PoseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoseLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "toggle_record" | "toggle" | "start" | "stop" => Ok(PoseLabel::ToggleRecord),
            "blackboard" => Ok(PoseLabel::Blackboard),
            "canvas" => Ok(PoseLabel::Canvas),
            "speaker" => Ok(PoseLabel::Speaker),
            "undefined" => Ok(PoseLabel::Undefined),
            _ => Err(format!("unknown pose `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub label: PoseLabel,
    pub fired_at: f64,
    pub held_for: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GestureConfig {
    pub hold_min: f64,
    pub hold_max: f64,
    /// Consecutive off-label frames tolerated inside a hold.
    pub dropout_tolerance: u32,
    pub refractory: f64,
    pub raise_margin: f64,
    pub side_margin: f64,
    pub chest_depth: f64,
    pub cross_margin: f64,
}

impl Default for GestureConfig {
    fn default() -> Self {
        Self {
            hold_min: 2.0,
            hold_max: 4.0,
            dropout_tolerance: 8,
            refractory: 0.5,
            raise_margin: 0.10,
            side_margin: 0.25,
            chest_depth: 0.35,
            cross_margin: 0.05,
        }
    }
}

impl GestureConfig {
    pub fn validate(&self) -> Result<(), GestureError> {
        let bad = |m: &str| Err(GestureError::BadConfig(m.to_string()));
        if !(self.hold_min > 0.0 && self.hold_min <= self.hold_max) {
            return bad("need 0 < hold_min <= hold_max");
        }
        if !(self.refractory >= 0.0) {
            return bad("refractory must be nonnegative");
        }
        for (name, v) in [
            ("raise_margin", self.raise_margin),
            ("side_margin", self.side_margin),
            ("chest_depth", self.chest_depth),
            ("cross_margin", self.cross_margin),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GestureError::BadConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

// ── Classification ─────────────────────────────────────────

/// Joints that must be fully tracked for a frame to carry a label.
pub const REQUIRED_JOINTS: [JointId; 8] = [
    JointId::WristLeft,
    JointId::WristRight,
    JointId::ShoulderLeft,
    JointId::ShoulderRight,
    JointId::Head,
    JointId::Spine,
    JointId::HipCenter,
    JointId::ShoulderCenter,
];

/// Truth values of the geometric clauses the poses are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PoseClauses {
    pub raised_left: bool,
    pub raised_right: bool,
    pub side_down_left: bool,
    pub side_down_right: bool,
    pub chest_left: bool,
    pub chest_right: bool,
    pub crossed: bool,
}

impl PoseClauses {
    pub fn evaluate(frame: &SkeletonFrame, cfg: &GestureConfig) -> Self {
        let p = |id| frame.position(id);
        let head = p(JointId::Head);
        let hip = p(JointId::HipCenter);
        let spine = p(JointId::Spine);
        let neck = p(JointId::ShoulderCenter);
        let wl = p(JointId::WristLeft);
        let wr = p(JointId::WristRight);

        let raised = |w: crate::skeleton::Vec3| w.y > head.y + cfg.raise_margin;
        let side_down = |w: crate::skeleton::Vec3, shoulder: crate::skeleton::Vec3| {
            w.y < hip.y + cfg.raise_margin && (w.x - shoulder.x).abs() < cfg.side_margin
        };
        let chest = |w: crate::skeleton::Vec3| {
            spine.y < w.y && w.y < neck.y && (w.z - spine.z).abs() < cfg.chest_depth
        };

        Self {
            raised_left: raised(wl),
            raised_right: raised(wr),
            side_down_left: side_down(wl, p(JointId::ShoulderLeft)),
            side_down_right: side_down(wr, p(JointId::ShoulderRight)),
            chest_left: chest(wl),
            chest_right: chest(wr),
            crossed: wr.x < spine.x - cfg.cross_margin && wl.x > spine.x + cfg.cross_margin,
        }
    }

    pub fn label(&self) -> PoseLabel {
        if self.raised_left && self.raised_right {
            PoseLabel::ToggleRecord
        } else if self.raised_right && self.side_down_left {
            PoseLabel::Canvas
        } else if self.raised_right && self.chest_left {
            PoseLabel::Blackboard
        } else if self.chest_left && self.chest_right && self.crossed {
            PoseLabel::Speaker
        } else {
            PoseLabel::Undefined
        }
    }
}

/// Labels one frame. Frames without a person, or with any of
/// [`REQUIRED_JOINTS`] not fully tracked, are `Undefined`.
pub fn classify_pose(frame: &SkeletonFrame, cfg: &GestureConfig) -> PoseLabel {
    if !frame.person_present() {
        return PoseLabel::Undefined;
    }
    if REQUIRED_JOINTS.iter().any(|id| !frame.joint(*id).is_tracked()) {
        return PoseLabel::Undefined;
    }
    PoseClauses::evaluate(frame, cfg).label()
}

// ── Hold timer ─────────────────────────────────────────────

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Hold {
    label: PoseLabel,
    since: f64,
    misses: u32,
    fired: bool,
}

/// Turns a stream of per-frame labels into command events.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HoldTimer {
    hold: Option<Hold>,
    last_t: Option<f64>,
    /// Current run of identical labels: (label, first frame time).
    run: Option<(PoseLabel, f64)>,
    /// Label of the last event and whether a new event may fire yet.
    last_fired: Option<PoseLabel>,
    armed_since: Option<f64>,
    armed: bool,
}

impl HoldTimer {
    pub fn new() -> Self {
        Self { armed: true, ..Self::default() }
    }

    /// Feeds one frame, classifying it first.
    pub fn update(
        &mut self,
        frame: &SkeletonFrame,
        cfg: &GestureConfig,
    ) -> Result<Option<GestureEvent>, GestureError> {
        let label = classify_pose(frame, cfg);
        self.update_label(frame.t(), label, cfg)
    }

    /// Feeds an already-computed label.
    pub fn update_label(
        &mut self,
        t: f64,
        label: PoseLabel,
        cfg: &GestureConfig,
    ) -> Result<Option<GestureEvent>, GestureError> {
        if let Some(prev) = self.last_t {
            if t < prev {
                return Err(GestureError::TimeRegression { prev, t });
            }
        }
        self.last_t = Some(t);

        match self.run {
            Some((l, _)) if l == label => {}
            _ => self.run = Some((label, t)),
        }

        self.update_refractory(t, label, cfg);

        match &mut self.hold {
            Some(h) if h.label == label => h.misses = 0,
            Some(h) => {
                h.misses += 1;
                if h.misses > cfg.dropout_tolerance {
                    self.hold = None;
                }
            }
            None => {}
        }
        if self.hold.is_none() && label != PoseLabel::Undefined {
            let since = self.run.map_or(t, |(_, s)| s);
            self.hold = Some(Hold { label, since, misses: 0, fired: false });
        }

        let armed = self.armed;
        let Some(h) = self.hold.as_mut() else {
            return Ok(None);
        };
        if h.fired || h.label != label || !armed {
            return Ok(None);
        }
        let held = t - h.since;
        if held + TIME_EPS < cfg.hold_min {
            return Ok(None);
        }
        h.fired = true;
        self.last_fired = Some(h.label);
        self.armed = false;
        self.armed_since = None;
        Ok(Some(GestureEvent { label: h.label, fired_at: t, held_for: held }))
    }

    fn update_refractory(&mut self, t: f64, label: PoseLabel, cfg: &GestureConfig) {
        if self.armed {
            return;
        }
        if Some(label) == self.last_fired {
            self.armed_since = None;
            return;
        }
        let since = *self.armed_since.get_or_insert(t);
        if t - since + TIME_EPS >= cfg.refractory {
            self.armed = true;
            self.armed_since = None;
        }
    }

    /// Label currently accumulating hold time, if any.
    pub fn holding(&self) -> Option<PoseLabel> {
        self.hold.map(|h| h.label)
    }

    /// Seconds the current hold has lasted, measured to the latest frame.
    pub fn elapsed(&self) -> f64 {
        match (self.hold, self.last_t) {
            (Some(h), Some(t)) => t - h.since,
            _ => 0.0,
        }
    }

    /// Whether a command is being received: a label is held and the hold is
    /// still inside the command window.
    pub fn led_hint(&self, cfg: &GestureConfig) -> bool {
        self.hold.is_some() && self.elapsed() < cfg.hold_max
    }
}
