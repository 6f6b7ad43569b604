//! Synthetic speaker body: a canonical skeleton, the pose library and the
//! sensor noise model.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::gesture::PoseLabel;
use crate::skeleton::{Joint, JointId, SkeletonError, SkeletonFrame, TrackState, Vec3};

/// Height of the hip center above the floor.
pub const HIP_HEIGHT: f64 = 0.95;

// Body frame: origin at the hip center, x toward the subject's right, y up,
// z toward the subject's back. A subject facing the sensor squarely has body
// axes equal to the sensor axes.
const HEAD: Vec3 = Vec3::new(0.0, 0.70, 0.0);
const NECK: Vec3 = Vec3::new(0.0, 0.50, 0.0);
const SPINE: Vec3 = Vec3::new(0.0, 0.25, 0.0);
const SHOULDER_L: Vec3 = Vec3::new(-0.20, 0.47, 0.0);
const SHOULDER_R: Vec3 = Vec3::new(0.20, 0.47, 0.0);

const RAISED_L: Vec3 = Vec3::new(-0.15, 1.00, -0.05);
const RAISED_R: Vec3 = Vec3::new(0.15, 1.00, -0.05);
const DOWN_L: Vec3 = Vec3::new(-0.22, -0.10, 0.0);
const DOWN_R: Vec3 = Vec3::new(0.22, -0.10, 0.0);
const CHEST_L: Vec3 = Vec3::new(-0.05, 0.375, -0.15);
const CROSSED_L: Vec3 = Vec3::new(0.15, 0.375, -0.15);
const CROSSED_R: Vec3 = Vec3::new(-0.15, 0.375, -0.15);

/// Number of near-miss poses in the library.
pub const DELUSIVE_COUNT: u8 = 4;

/// Arm configurations the synthetic speaker can adopt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pose {
    Neutral,
    Toggle,
    Canvas,
    Blackboard,
    Speaker,
    /// Near misses of the command poses, each violating exactly the clause
    /// that separates it from a command by half again the clause margin.
    Delusive(u8),
}

impl Pose {
    pub const COMMANDS: [Pose; 4] = [Pose::Toggle, Pose::Blackboard, Pose::Canvas, Pose::Speaker];

    /// Wrist positions (left, right) in the body frame.
    pub fn wrists(self) -> [Vec3; 2] {
        match self {
            Pose::Neutral => [DOWN_L, DOWN_R],
            Pose::Toggle => [RAISED_L, RAISED_R],
            Pose::Canvas => [Vec3::new(-0.20, -0.12, 0.0), RAISED_R],
            Pose::Blackboard => [CHEST_L, RAISED_R],
            Pose::Speaker => [CROSSED_L, CROSSED_R],
            Pose::Delusive(k) => match k % DELUSIVE_COUNT {
                // Both hands at face height, short of raised.
                0 => [Vec3::new(-0.15, 0.65, -0.10), Vec3::new(0.15, 0.65, -0.10)],
                // Canvas with the low arm held out to the side.
                1 => [Vec3::new(-0.575, -0.12, 0.0), RAISED_R],
                // Blackboard with the raised hand only at the forehead.
                2 => [CHEST_L, Vec3::new(0.15, 0.65, -0.10)],
                // Hands on the chest without crossing.
                _ => [Vec3::new(-0.025, 0.375, -0.15), Vec3::new(0.025, 0.375, -0.15)],
            },
        }
    }

    /// The label the classifier should assign to this pose.
    pub fn label(self) -> PoseLabel {
        match self {
            Pose::Toggle => PoseLabel::ToggleRecord,
            Pose::Canvas => PoseLabel::Canvas,
            Pose::Blackboard => PoseLabel::Blackboard,
            Pose::Speaker => PoseLabel::Speaker,
            Pose::Neutral | Pose::Delusive(_) => PoseLabel::Undefined,
        }
    }

    /// Parses a UI pose name: a command label, `neutral`, or `delusive<k>`.
    pub fn parse(name: &str) -> Option<Self> {
        if name == "neutral" {
            return Some(Pose::Neutral);
        }
        if let Some(k) = name.strip_prefix("delusive") {
            return k.parse().ok().filter(|k| *k < DELUSIVE_COUNT).map(Pose::Delusive);
        }
        match name.parse::<PoseLabel>().ok()? {
            PoseLabel::ToggleRecord => Some(Pose::Toggle),
            PoseLabel::Canvas => Some(Pose::Canvas),
            PoseLabel::Blackboard => Some(Pose::Blackboard),
            PoseLabel::Speaker => Some(Pose::Speaker),
            PoseLabel::Undefined => Some(Pose::Neutral),
        }
    }
}

/// All twenty joints in the body frame for the given wrist positions.
pub fn body_joints(wrists: [Vec3; 2]) -> [Vec3; JointId::COUNT] {
    let arm = |shoulder: Vec3, wrist: Vec3, side: f64| {
        let elbow = shoulder.lerp(wrist, 0.5) + Vec3::new(side * 0.05, 0.0, 0.03);
        let d = wrist - elbow;
        let n = d.norm().max(1e-6);
        (elbow, wrist + d * (0.08 / n))
    };
    let (elbow_l, hand_l) = arm(SHOULDER_L, wrists[0], -1.0);
    let (elbow_r, hand_r) = arm(SHOULDER_R, wrists[1], 1.0);
    let mut out = [Vec3::ZERO; JointId::COUNT];
    for id in JointId::ALL {
        out[id.index()] = match id {
            JointId::Head => HEAD,
            JointId::ShoulderCenter => NECK,
            JointId::Spine => SPINE,
            JointId::HipCenter => Vec3::ZERO,
            JointId::ShoulderLeft => SHOULDER_L,
            JointId::ElbowLeft => elbow_l,
            JointId::WristLeft => wrists[0],
            JointId::HandLeft => hand_l,
            JointId::ShoulderRight => SHOULDER_R,
            JointId::ElbowRight => elbow_r,
            JointId::WristRight => wrists[1],
            JointId::HandRight => hand_r,
            JointId::HipLeft => Vec3::new(-0.10, -0.05, 0.0),
            JointId::KneeLeft => Vec3::new(-0.10, -0.48, -0.02),
            JointId::AnkleLeft => Vec3::new(-0.10, -0.88, 0.02),
            JointId::FootLeft => Vec3::new(-0.10, -0.93, -0.08),
            JointId::HipRight => Vec3::new(0.10, -0.05, 0.0),
            JointId::KneeRight => Vec3::new(0.10, -0.48, -0.02),
            JointId::AnkleRight => Vec3::new(0.10, -0.88, 0.02),
            JointId::FootRight => Vec3::new(0.10, -0.93, -0.08),
        };
    }
    out
}

/// Per-joint sensor noise: isotropic Gaussian position error and independent
/// dropout, where a dropped joint is reported as not tracked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub sigma: f64,
    pub dropout: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel { sigma: 0.0, dropout: 0.0 };

    /// Perturbs sensor-frame positions into a frame. The number of random
    /// draws does not depend on the parameters, so two models driven by
    /// equally seeded generators differ only in their effect.
    pub fn apply<R: Rng>(
        &self,
        rng: &mut R,
        t: f64,
        person_present: bool,
        positions: &[Vec3; JointId::COUNT],
    ) -> Result<SkeletonFrame, SkeletonError> {
        let mut joints = Vec::with_capacity(JointId::COUNT);
        for id in JointId::ALL {
            let n: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let drop = rng.gen::<f64>() < self.dropout;
            let p = positions[id.index()] + Vec3::new(n[0], n[1], n[2]) * self.sigma;
            let track = if drop { TrackState::NotTracked } else { TrackState::Tracked };
            joints.push(Joint { id, position: p, track });
        }
        SkeletonFrame::new(t, person_present, &joints)
    }
}

/// Canonical frames of a subject holding `pose` at the given sensor-frame
/// hip position, facing the sensor, sampled at `rate` from `start` for
/// `duration` seconds.
pub fn synthesize_pose_frames(
    pose: Pose,
    hip: Vec3,
    start: f64,
    duration: f64,
    rate: f64,
) -> Result<Vec<SkeletonFrame>, SkeletonError> {
    let joints = body_joints(pose.wrists()).map(|p| p + hip);
    let n = (duration * rate).round() as usize;
    (0..n).map(|k| SkeletonFrame::from_positions(start + k as f64 / rate, true, &joints)).collect()
}
