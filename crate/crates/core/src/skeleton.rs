//! Skeleton data model and the line-oriented trace format.
//!
//! Positions are in the sensor frame, in meters: `y` up, `z` pointing out of
//! the sensor, and `x` toward the subject's right-hand side when the subject
//! faces the sensor (the sensor's own left).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest absolute coordinate accepted for a joint, in meters.
pub const MAX_COORD: f64 = 10.0;

/// Rate assumed for traces that carry no header.
pub const DEFAULT_RATE: f64 = 30.0;

pub const TRACE_MAGIC: &str = "#reclass-trace v1";
pub const TRACE_FRAME_TAG: &str = "y-up-z-forward";

#[derive(Debug, Error, PartialEq)]
pub enum SkeletonError {
    #[error("joint {0} listed more than once")]
    DuplicateJoint(JointId),
    #[error("joint {0} missing from frame")]
    MissingJoint(JointId),
    #[error("joint {joint} has invalid coordinate {value}")]
    BadCoordinate { joint: JointId, value: f64 },
    #[error("invalid frame time {0}")]
    BadTime(f64),
    #[error("invalid rate {0}")]
    BadRate(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("frame {index} at t={t} does not follow t={prev}")]
    NonMonotonic { index: usize, prev: f64, t: f64 },
    #[error("trace has no frames")]
    EmptyTrace,
}

// ── Joints ─────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointId {
    Head,
    ShoulderCenter,
    Spine,
    HipCenter,
    ShoulderLeft,
    ElbowLeft,
    WristLeft,
    HandLeft,
    ShoulderRight,
    ElbowRight,
    WristRight,
    HandRight,
    HipLeft,
    KneeLeft,
    AnkleLeft,
    FootLeft,
    HipRight,
    KneeRight,
    AnkleRight,
    FootRight,
}

impl JointId {
    pub const COUNT: usize = 20;

    /// All joints in canonical (serialization) order.
    pub const ALL: [JointId; 20] = [
        JointId::Head,
        JointId::ShoulderCenter,
        JointId::Spine,
        JointId::HipCenter,
        JointId::ShoulderLeft,
        JointId::ElbowLeft,
        JointId::WristLeft,
        JointId::HandLeft,
        JointId::ShoulderRight,
        JointId::ElbowRight,
        JointId::WristRight,
        JointId::HandRight,
        JointId::HipLeft,
        JointId::KneeLeft,
        JointId::AnkleLeft,
        JointId::FootLeft,
        JointId::HipRight,
        JointId::KneeRight,
        JointId::AnkleRight,
        JointId::FootRight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            JointId::Head => "head",
            JointId::ShoulderCenter => "shoulder_center",
            JointId::Spine => "spine",
            JointId::HipCenter => "hip_center",
            JointId::ShoulderLeft => "shoulder_left",
            JointId::ElbowLeft => "elbow_left",
            JointId::WristLeft => "wrist_left",
            JointId::HandLeft => "hand_left",
            JointId::ShoulderRight => "shoulder_right",
            JointId::ElbowRight => "elbow_right",
            JointId::WristRight => "wrist_right",
            JointId::HandRight => "hand_right",
            JointId::HipLeft => "hip_left",
            JointId::KneeLeft => "knee_left",
            JointId::AnkleLeft => "ankle_left",
            JointId::FootLeft => "foot_left",
            JointId::HipRight => "hip_right",
            JointId::KneeRight => "knee_right",
            JointId::AnkleRight => "ankle_right",
            JointId::FootRight => "foot_right",
        }
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JointId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        JointId::ALL
            .iter()
            .copied()
            .find(|j| j.name() == s)
            .ok_or_else(|| format!("unknown joint `{s}`"))
    }
}

/// Per-joint tracking confidence. Ordered weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TrackState {
    NotTracked,
    Inferred,
    Tracked,
}

impl TrackState {
    fn code(self) -> char {
        match self {
            TrackState::Tracked => 'T',
            TrackState::Inferred => 'I',
            TrackState::NotTracked => 'N',
        }
    }

    fn from_code(c: &str) -> Option<Self> {
        match c {
            "T" => Some(TrackState::Tracked),
            "I" => Some(TrackState::Inferred),
            "N" => Some(TrackState::NotTracked),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn lerp(self, other: Vec3, alpha: f64) -> Vec3 {
        Vec3 {
            x: self.x + (other.x - self.x) * alpha,
            y: self.y + (other.y - self.y) * alpha,
            z: self.z + (other.z - self.z) * alpha,
        }
    }

    pub fn midpoint(self, other: Vec3) -> Vec3 {
        self.lerp(other, 0.5)
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn components(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub id: JointId,
    pub position: Vec3,
    pub track: TrackState,
}

impl Joint {
    pub fn tracked(id: JointId, position: Vec3) -> Self {
        Self { id, position, track: TrackState::Tracked }
    }

    pub fn is_tracked(&self) -> bool {
        self.track == TrackState::Tracked
    }
}

fn check_position(id: JointId, p: Vec3) -> Result<(), SkeletonError> {
    for v in p.components() {
        if !v.is_finite() || v.abs() > MAX_COORD {
            return Err(SkeletonError::BadCoordinate { joint: id, value: v });
        }
    }
    Ok(())
}

// ── Frames ─────────────────────────────────────────────────

/// One solved skeleton at a point in time. Always holds all twenty joints,
/// stored in [`JointId::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkeletonFrame {
    t: f64,
    person_present: bool,
    joints: [Joint; JointId::COUNT],
}

impl SkeletonFrame {
    /// Builds a frame from an unordered joint list, which must name every
    /// joint exactly once.
    pub fn new(t: f64, person_present: bool, joints: &[Joint]) -> Result<Self, SkeletonError> {
        if !t.is_finite() || t < 0.0 {
            return Err(SkeletonError::BadTime(t));
        }
        let mut slots: [Option<Joint>; JointId::COUNT] = [None; JointId::COUNT];
        for j in joints {
            check_position(j.id, j.position)?;
            let slot = &mut slots[j.id.index()];
            if slot.is_some() {
                return Err(SkeletonError::DuplicateJoint(j.id));
            }
            *slot = Some(*j);
        }
        let mut out = [Joint::tracked(JointId::Head, Vec3::ZERO); JointId::COUNT];
        for (i, id) in JointId::ALL.iter().enumerate() {
            out[i] = slots[i].ok_or(SkeletonError::MissingJoint(*id))?;
        }
        Ok(Self { t, person_present, joints: out })
    }

    /// Builds a frame from positions given in [`JointId::ALL`] order, all
    /// marked tracked.
    pub fn from_positions(
        t: f64,
        person_present: bool,
        positions: &[Vec3; JointId::COUNT],
    ) -> Result<Self, SkeletonError> {
        let joints: Vec<Joint> = JointId::ALL
            .iter()
            .zip(positions.iter())
            .map(|(id, p)| Joint::tracked(*id, *p))
            .collect();
        Self::new(t, person_present, &joints)
    }

    /// A frame reporting nobody in view.
    pub fn absent(t: f64) -> Self {
        let mut joints = [Joint::tracked(JointId::Head, Vec3::ZERO); JointId::COUNT];
        for (slot, id) in joints.iter_mut().zip(JointId::ALL) {
            *slot = Joint { id, position: Vec3::ZERO, track: TrackState::NotTracked };
        }
        Self { t: t.max(0.0), person_present: false, joints }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn person_present(&self) -> bool {
        self.person_present
    }

    pub fn joints(&self) -> &[Joint; JointId::COUNT] {
        &self.joints
    }

    pub fn joint(&self, id: JointId) -> &Joint {
        &self.joints[id.index()]
    }

    pub fn position(&self, id: JointId) -> Vec3 {
        self.joints[id.index()].position
    }

    /// Same frame stamped with a new time.
    pub fn with_time(&self, t: f64) -> Result<Self, SkeletonError> {
        if !t.is_finite() || t < 0.0 {
            return Err(SkeletonError::BadTime(t));
        }
        Ok(Self { t, ..self.clone() })
    }

    /// Applies `f` to every joint; re-validates the result.
    pub fn map_joints(&self, mut f: impl FnMut(Joint) -> Joint) -> Result<Self, SkeletonError> {
        let joints: Vec<Joint> = self.joints.iter().map(|j| f(*j)).collect();
        Self::new(self.t, self.person_present, &joints)
    }

    pub fn translated(&self, offset: Vec3) -> Result<Self, SkeletonError> {
        self.map_joints(|j| Joint { position: j.position + offset, ..j })
    }
}

impl<'de> Deserialize<'de> for SkeletonFrame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            t: f64,
            person_present: bool,
            joints: Vec<Joint>,
        }
        let raw = Raw::deserialize(d)?;
        SkeletonFrame::new(raw.t, raw.person_present, &raw.joints).map_err(serde::de::Error::custom)
    }
}

/// Looks up a joint by id. Frames always carry every joint, so this cannot
/// fail.
pub fn joint_of(frame: &SkeletonFrame, id: JointId) -> Joint {
    *frame.joint(id)
}

// ── Traces ─────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    frames: Vec<SkeletonFrame>,
    nominal_rate: f64,
}

impl Trace {
    pub fn new(frames: Vec<SkeletonFrame>, nominal_rate: f64) -> Result<Self, SkeletonError> {
        if !(nominal_rate.is_finite() && nominal_rate > 0.0) {
            return Err(SkeletonError::BadRate(nominal_rate));
        }
        for (i, w) in frames.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(SkeletonError::NonMonotonic { index: i + 1, prev: w[0].t, t: w[1].t });
            }
        }
        Ok(Self { frames, nominal_rate })
    }

    pub fn empty() -> Self {
        Self { frames: Vec::new(), nominal_rate: DEFAULT_RATE }
    }

    pub fn frames(&self) -> &[SkeletonFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<SkeletonFrame> {
        self.frames
    }

    pub fn nominal_rate(&self) -> f64 {
        self.nominal_rate
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> SkeletonError {
    SkeletonError::Parse { line, msg: msg.into() }
}

fn parse_f64(line: usize, s: &str) -> Result<f64, SkeletonError> {
    s.parse::<f64>().map_err(|_| parse_err(line, format!("bad number `{s}`")))
}

fn parse_header(line_no: usize, line: &str) -> Result<f64, SkeletonError> {
    let rest = line
        .strip_prefix(TRACE_MAGIC)
        .ok_or_else(|| parse_err(line_no, "unrecognized header"))?;
    let mut rate = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("rate", v)) => rate = Some(parse_f64(line_no, v)?),
            Some(("frame", v)) if v == TRACE_FRAME_TAG => {}
            Some(("frame", v)) => return Err(parse_err(line_no, format!("unsupported frame `{v}`"))),
            _ => return Err(parse_err(line_no, format!("unexpected header field `{field}`"))),
        }
    }
    let rate = rate.ok_or_else(|| parse_err(line_no, "header lacks rate"))?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(parse_err(line_no, format!("rate must be positive, got {rate}")));
    }
    Ok(rate)
}

fn parse_frame_line(line_no: usize, line: &str) -> Result<SkeletonFrame, SkeletonError> {
    let mut fields = line.split_whitespace();
    let t = fields
        .next()
        .and_then(|f| f.strip_prefix("t="))
        .ok_or_else(|| parse_err(line_no, "expected `t=<sec>`"))?;
    let t = parse_f64(line_no, t)?;
    let present = match fields.next().and_then(|f| f.strip_prefix("present=")) {
        Some("1") => true,
        Some("0") => false,
        _ => return Err(parse_err(line_no, "expected `present=<0|1>`")),
    };
    let mut joints = Vec::with_capacity(JointId::COUNT);
    for group in fields {
        let (name, rest) = group
            .split_once(':')
            .ok_or_else(|| parse_err(line_no, format!("bad joint group `{group}`")))?;
        let id: JointId = name.parse().map_err(|e: String| parse_err(line_no, e))?;
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 4 {
            return Err(parse_err(line_no, format!("joint `{name}` needs x,y,z,state")));
        }
        let position = Vec3::new(
            parse_f64(line_no, parts[0])?,
            parse_f64(line_no, parts[1])?,
            parse_f64(line_no, parts[2])?,
        );
        let track = TrackState::from_code(parts[3])
            .ok_or_else(|| parse_err(line_no, format!("bad track state `{}`", parts[3])))?;
        joints.push(Joint { id, position, track });
    }
    SkeletonFrame::new(t, present, &joints).map_err(|e| parse_err(line_no, e.to_string()))
}

/// Parses the text trace format. Blank lines are ignored; a missing header
/// is accepted only for an empty file.
pub fn parse_trace(bytes: &[u8]) -> Result<Trace, SkeletonError> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_err(0, format!("not utf-8: {e}")))?;
    let mut rate = None;
    let mut frames: Vec<SkeletonFrame> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if rate.is_none() {
            rate = Some(parse_header(line_no, line)?);
            continue;
        }
        let frame = parse_frame_line(line_no, line)?;
        if let Some(prev) = frames.last() {
            if frame.t <= prev.t {
                return Err(SkeletonError::NonMonotonic { index: frames.len(), prev: prev.t, t: frame.t });
            }
        }
        frames.push(frame);
    }
    Trace::new(frames, rate.unwrap_or(DEFAULT_RATE))
}

/// Writes a trace in the text format. Numbers use the shortest
/// representation that parses back to the same value.
pub fn serialize_trace(trace: &Trace) -> String {
    use std::fmt::Write;
    let mut out = format!("{TRACE_MAGIC} rate={} frame={TRACE_FRAME_TAG}\n", trace.nominal_rate);
    for f in &trace.frames {
        let _ = write!(out, "t={} present={}", f.t, u8::from(f.person_present));
        for j in &f.joints {
            let p = j.position;
            let _ = write!(out, " {}:{},{},{},{}", j.id.name(), p.x, p.y, p.z, j.track.code());
        }
        out.push('\n');
    }
    out
}

// ── Resampling ─────────────────────────────────────────────

const SNAP_EPS: f64 = 1e-9;

fn interpolate(a: &SkeletonFrame, b: &SkeletonFrame, t: f64) -> SkeletonFrame {
    let alpha = (t - a.t) / (b.t - a.t);
    let mut joints = a.joints;
    for (out, (ja, jb)) in joints.iter_mut().zip(a.joints.iter().zip(b.joints.iter())) {
        out.position = ja.position.lerp(jb.position, alpha);
        out.track = ja.track.min(jb.track);
    }
    SkeletonFrame { t, person_present: a.person_present && b.person_present, joints }
}

/// Resamples a trace onto a uniform grid `t_first + k / rate` covering the
/// original span, interpolating joint positions linearly. An interpolated
/// joint takes the weaker of its two bracketing track states.
pub fn resample(trace: &Trace, rate: f64) -> Result<Trace, SkeletonError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(SkeletonError::BadRate(rate));
    }
    let (first, last) = match (trace.frames.first(), trace.frames.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(SkeletonError::EmptyTrace),
    };
    let count = ((last - first) * rate + SNAP_EPS).floor() as usize + 1;
    let mut frames = Vec::with_capacity(count);
    let mut seg = 0;
    for k in 0..count {
        let t = first + k as f64 / rate;
        while seg + 1 < trace.frames.len() && trace.frames[seg + 1].t <= t + SNAP_EPS {
            seg += 1;
        }
        let a = &trace.frames[seg];
        let frame = if (t - a.t).abs() <= SNAP_EPS || seg + 1 == trace.frames.len() {
            SkeletonFrame { t, ..a.clone() }
        } else {
            interpolate(a, &trace.frames[seg + 1], t)
        };
        frames.push(frame);
    }
    Trace::new(frames, rate)
}
