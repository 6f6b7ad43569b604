//! Synthetic labelled skeleton corpora for classifier evaluation.
//!
//! A corpus is one continuous recording of a speaker who wanders in front of
//! the sensor, talks with small hand movements, and now and then holds one
//! of the command poses or a near miss. Each held pose comes with a truth
//! window spanning its transitions plus a short grace period.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::body::{NoiseModel, Pose, DELUSIVE_COUNT};
use super::script::{ScriptBuilder, SpeakerScript};
use crate::skeleton::{SkeletonError, SkeletonFrame, Trace, Vec3};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid corpus spec: {0}")]
    BadSpec(String),
    #[error("parsing corpus spec: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error("label track line {line}: {msg}")]
    LabelParse { line: usize, msg: String },
}

/// Row classes of the confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthClass {
    Start,
    Stop,
    Blackboard,
    Canvas,
    Speaker,
    Undefined,
}

impl TruthClass {
    pub const ALL: [TruthClass; 6] = [
        TruthClass::Start,
        TruthClass::Stop,
        TruthClass::Blackboard,
        TruthClass::Canvas,
        TruthClass::Speaker,
        TruthClass::Undefined,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TruthClass::Start => "Start",
            TruthClass::Stop => "Stop",
            TruthClass::Blackboard => "Blackboard",
            TruthClass::Canvas => "Canvas",
            TruthClass::Speaker => "Speaker",
            TruthClass::Undefined => "Undefined",
        }
    }
}

impl fmt::Display for TruthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TruthClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TruthClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown class `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthWindow {
    pub start: f64,
    pub end: f64,
    pub class: TruthClass,
}

/// Rectangle on the floor, in the ground frame of the script.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSpec {
    /// Instances per row class; toggles get twice this many, split between
    /// Start and Stop.
    pub instances_per_gesture: usize,
    /// Range of pose hold durations in seconds.
    pub hold_duration: (f64, f64),
    /// Seconds to move the arms into or out of a pose.
    pub transition: f64,
    /// Extra seconds appended to each truth window.
    pub grace: f64,
    /// Still time between instances, seconds.
    pub dwell: (f64, f64),
    pub walk_speed: (f64, f64),
    /// Chance of a brief hand movement while talking.
    pub gesticulate_prob: f64,
    /// Per-axis joint position noise, meters.
    pub noise_sigma: f64,
    /// Per-joint, per-frame chance of a joint being reported untracked.
    pub dropout_prob: f64,
    pub rate: f64,
    /// Sensor height above the floor.
    pub sensor_height: f64,
    /// Where the speaker may stand, in sensor coordinates (x left, z away).
    pub area: Area,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            instances_per_gesture: 20,
            hold_duration: (2.2, 3.5),
            transition: 0.4,
            grace: 0.3,
            dwell: (3.0, 8.0),
            walk_speed: (0.5, 1.0),
            gesticulate_prob: 0.3,
            noise_sigma: 0.02,
            dropout_prob: 0.05,
            rate: 30.0,
            sensor_height: 1.2,
            area: Area { x0: -0.5, x1: 0.5, z0: 2.0, z1: 3.5 },
        }
    }
}

impl CorpusSpec {
    pub fn from_toml(text: &str) -> Result<Self, CorpusError> {
        let spec: CorpusSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("spec always serializes")
    }

    /// The same spec without sensor noise.
    pub fn clean(&self) -> Self {
        Self { noise_sigma: 0.0, dropout_prob: 0.0, ..self.clone() }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel { sigma: self.noise_sigma, dropout: self.dropout_prob }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::BadSpec(m.into()));
        let range = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi;
        if self.instances_per_gesture == 0 {
            return bad("instances_per_gesture must be positive");
        }
        if !range(self.hold_duration) || !range(self.dwell) || !range(self.walk_speed) || self.walk_speed.0 <= 0.0 {
            return bad("hold, dwell and walk_speed must be ordered non-negative ranges");
        }
        if !(self.transition > 0.0 && self.grace >= 0.0 && self.rate > 0.0) {
            return bad("transition and rate must be positive, grace non-negative");
        }
        if !(0.0..=1.0).contains(&self.gesticulate_prob) || !(0.0..=1.0).contains(&self.dropout_prob) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise sigma must be non-negative");
        }
        if !(self.area.x0 <= self.area.x1 && self.area.z0 <= self.area.z1 && self.area.z0 > 0.5) {
            return bad("area must be ordered and in front of the sensor");
        }
        Ok(())
    }
}

/// A script plus the windows where each instance should be recognized.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedSession {
    pub script: SpeakerScript,
    pub truth: Vec<TruthWindow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub trace: Trace,
    pub truth: Vec<TruthWindow>,
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Random talking hand positions: in front of the belly, below the chest
/// band's top and well short of any command pose.
fn gesticulation<R: Rng>(rng: &mut R) -> [Vec3; 2] {
    let mut w = |side: f64| Vec3::new(side * rng.gen_range(0.12..0.30), rng.gen_range(0.0..0.2), rng.gen_range(-0.35..-0.2));
    [w(-1.0), w(1.0)]
}

/// Lays out a randomized session over `area`. The speaker starts in its
/// middle. Instances appear in shuffled order.
pub fn generate_script<R: Rng>(spec: &CorpusSpec, rng: &mut R) -> ScriptedSession {
    let n = spec.instances_per_gesture;
    let mut poses: Vec<Pose> = Vec::with_capacity(6 * n);
    poses.extend(std::iter::repeat(Pose::Toggle).take(2 * n));
    for p in [Pose::Blackboard, Pose::Canvas, Pose::Speaker] {
        poses.extend(std::iter::repeat(p).take(n));
    }
    poses.extend((0..n).map(|k| Pose::Delusive((k % DELUSIVE_COUNT as usize) as u8)));
    poses.shuffle(rng);

    let a = spec.area;
    let mut b = ScriptBuilder::new((a.x0 + a.x1) / 2.0, (a.z0 + a.z1) / 2.0);
    b.hold(2.0);
    let mut truth = Vec::with_capacity(poses.len());
    let mut toggles = 0usize;
    for pose in poses {
        let x = uniform(rng, (a.x0, a.x1));
        let z = uniform(rng, (a.z0, a.z1));
        let speed = uniform(rng, spec.walk_speed);
        b.walk_to(x, z, speed).hold(uniform(rng, spec.dwell) / 2.0);
        if rng.gen::<f64>() < spec.gesticulate_prob {
            let dur = rng.gen_range(0.5..1.0);
            b.arms(gesticulation(rng), spec.transition).hold(dur).pose(Pose::Neutral, spec.transition);
        }
        b.hold(uniform(rng, spec.dwell) / 2.0);

        let start = b.now();
        let hold = uniform(rng, spec.hold_duration);
        b.pose(pose, spec.transition).hold(hold).pose(Pose::Neutral, spec.transition);
        let class = match pose {
            Pose::Toggle => {
                toggles += 1;
                if toggles % 2 == 1 {
                    TruthClass::Start
                } else {
                    TruthClass::Stop
                }
            }
            Pose::Blackboard => TruthClass::Blackboard,
            Pose::Canvas => TruthClass::Canvas,
            Pose::Speaker => TruthClass::Speaker,
            Pose::Neutral | Pose::Delusive(_) => TruthClass::Undefined,
        };
        truth.push(TruthWindow { start, end: b.now() + spec.grace, class });
        b.hold(1.0);
    }
    b.hold(2.0);
    ScriptedSession { script: b.build(), truth }
}

/// Generates a corpus. The seed fixes the script and the sensor noise
/// independently, so the clean and noisy corpora of one seed share a script
/// and differ only by the noise.
pub fn generate_corpus(spec: &CorpusSpec, seed: u64) -> Result<Corpus, CorpusError> {
    spec.validate()?;
    let mut script_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(1);
    let session = generate_script(spec, &mut script_rng);
    let floor = -spec.sensor_height;
    let n = (session.script.duration() * spec.rate).floor() as usize + 1;
    let mut frames = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 / spec.rate;
        let place = session.script.at(t).expect("script has keys");
        let hip = place.hip(floor);
        let joints = place.body().map(|p| p + hip);
        frames.push(spec.noise().apply(&mut noise_rng, t, true, &joints)?);
    }
    Ok(Corpus { trace: Trace::new(frames, spec.rate)?, truth: session.truth })
}

/// Label track as CSV: `start,end,class`.
pub fn write_labels(truth: &[TruthWindow]) -> String {
    let mut out = String::from("start,end,class\n");
    for w in truth {
        out.push_str(&format!("{},{},{}\n", w.start, w.end, w.class));
    }
    out
}

pub fn parse_labels(text: &str) -> Result<Vec<TruthWindow>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("start")) {
            continue;
        }
        let err = |msg: String| CorpusError::LabelParse { line: i + 1, msg };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let [s, e, c] = cols[..] else {
            return Err(err(format!("expected 3 columns, got {}", cols.len())));
        };
        let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("bad number `{v}`")));
        let (start, end) = (num(s)?, num(e)?);
        if !(start <= end) {
            return Err(err("window ends before it starts".into()));
        }
        out.push(TruthWindow { start, end, class: c.parse().map_err(err)? });
    }
    Ok(out)
}

/// Per-joint position differences between two frames of equal time.
pub fn displacements(noisy: &SkeletonFrame, clean: &SkeletonFrame) -> Vec<Vec3> {
    noisy.joints().iter().zip(clean.joints()).map(|(a, b)| a.position - b.position).collect()
}
