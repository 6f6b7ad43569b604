//! JSON-lines messages between the core and the control UI. Every line is one
//! object whose `type` field selects the message.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::director::{LedPanel, SceneMode};
use crate::gesture::GestureEvent;
use crate::rig::RigSnapshot;
use crate::skeleton::SkeletonFrame;

#[derive(Debug, Error, PartialEq)]
pub enum UiError {
    #[error("unknown message type `{0}`")]
    UnknownType(String),
    #[error("malformed message: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub start: f64,
    pub stop: Option<f64>,
    pub ticks: usize,
}

/// Requests the UI can make of the simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimCommand {
    Start,
    Stop,
    /// Replaces the skeleton source with a trace given as file text.
    LoadTrace { trace: String },
    SetPreset { scene: SceneMode, azimuth: f64, elevation: f64 },
    /// Moves the simulated speaker to a floor position in room coordinates.
    MoveSpeaker { x: f64, z: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UiMessage {
    Skeleton { frame: SkeletonFrame },
    /// Asks the core to synthesize a canonical pose for `duration` seconds.
    Pose { name: String, duration: f64 },
    Rig { t: f64, s1: RigSnapshot, s2: RigSnapshot },
    Gesture { event: GestureEvent },
    Led { t: f64, panel: LedPanel, mask: u8 },
    Edl { recording: bool, mode: SceneMode, segments: Vec<SegmentSummary> },
    Command { command: SimCommand },
    Error { message: String },
}

const TYPES: [&str; 8] = ["skeleton", "pose", "rig", "gesture", "led", "edl", "command", "error"];

impl UiMessage {
    pub fn error(message: impl Into<String>) -> Self {
        UiMessage::Error { message: message.into() }
    }
}

/// Serializes a message as a single line with its trailing newline.
pub fn encode_ui(msg: &UiMessage) -> String {
    let mut line = serde_json::to_string(msg).expect("ui messages always serialize");
    line.push('\n');
    line
}

pub fn decode_ui(line: &str) -> Result<UiMessage, UiError> {
    let value: serde_json::Value =
        serde_json::from_str(line.trim()).map_err(|e| UiError::Malformed(e.to_string()))?;
    let ty = value
        .get("type")
        .and_then(|t| t.as_str())
        .ok_or_else(|| UiError::Malformed("missing `type` field".into()))?;
    if !TYPES.contains(&ty) {
        return Err(UiError::UnknownType(ty.to_string()));
    }
    serde_json::from_value(value).map_err(|e| UiError::Malformed(e.to_string()))
}
