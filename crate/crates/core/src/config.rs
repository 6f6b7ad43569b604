//! System configuration file (TOML).
//!
//! Every section is optional and falls back to the built-in defaults.
//! Presets, when omitted, are computed by aiming the camera rig at the
//! centers of the blackboard and canvas areas.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::director::{DirectorConfig, Presets};
use crate::gesture::GestureConfig;
use crate::motion::{build_profile, MotionProfile};
use crate::rig::RigGeometry;
use crate::sim::room::RoomModel;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionConfig {
    /// Start/stop speed in steps per second.
    pub v_min: f64,
    /// Cruise speed in steps per second.
    pub v_max: f64,
    pub table_len: usize,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self { v_min: 100.0, v_max: 1000.0, table_len: 64 }
    }
}

impl MotionConfig {
    pub fn profile(&self) -> Result<MotionProfile, ConfigError> {
        build_profile(self.v_min, self.v_max, self.table_len).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Speeds as sent over the controller link.
    pub fn wire_speeds(&self) -> (u16, u16) {
        (self.v_min.round() as u16, self.v_max.round() as u16)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub room: RoomModel,
    pub s1: RigGeometry,
    pub s2: RigGeometry,
    pub presets: Option<Presets>,
    pub gesture: GestureConfig,
    pub motion: MotionConfig,
    pub director: DirectorConfig,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            room: RoomModel::default(),
            s1: RigGeometry::default_s1(),
            s2: RigGeometry::default_s2(),
            presets: None,
            gesture: GestureConfig::default(),
            motion: MotionConfig::default(),
            director: DirectorConfig::default(),
        }
    }
}

impl SystemConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: SystemConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    /// Configured presets, or ones aimed at the wall areas.
    pub fn effective_presets(&self) -> Result<Presets, ConfigError> {
        match self.presets {
            Some(p) => Ok(p),
            None => self.room.presets_for(&self.s2).map_err(|e| ConfigError::Invalid(e.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| ConfigError::Invalid(m);
        self.room.validate().map_err(invalid)?;
        self.s1.validate().map_err(|e| invalid(format!("s1: {e}")))?;
        self.s2.validate().map_err(|e| invalid(format!("s2: {e}")))?;
        self.gesture.validate().map_err(|e| invalid(e.to_string()))?;
        self.motion.profile()?;
        if self.motion.v_max > u16::MAX as f64 {
            return Err(invalid("motion.v_max does not fit the controller link".into()));
        }
        if !(self.director.deadband >= 0.0 && self.director.retarget_interval >= 0.0) {
            return Err(invalid("director deadband and retarget interval must be non-negative".into()));
        }
        let presets = self.effective_presets()?;
        for (name, aim) in [("blackboard", presets.blackboard), ("canvas", presets.canvas)] {
            let (plo, phi) = self.s2.pan_limits;
            let (tlo, thi) = self.s2.tilt_limits;
            if !(plo..=phi).contains(&aim.azimuth) || !(tlo..=thi).contains(&aim.elevation) {
                return Err(invalid(format!("{name} preset lies outside the s2 travel limits")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(SystemConfig::from_toml("").unwrap(), SystemConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut cfg = SystemConfig::default();
        cfg.presets = Some(cfg.effective_presets().unwrap());
        cfg.gesture.hold_min = 1.5;
        assert_eq!(SystemConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_override() {
        let cfg = SystemConfig::from_toml("[director]\ndeadband = 3.0\n").unwrap();
        assert_eq!(cfg.director.deadband, 3.0);
        assert_eq!(cfg.director.retarget_interval, 0.2);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(matches!(SystemConfig::from_toml("[gesture]\nhold_mn = 1.0\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(SystemConfig::from_toml("[motion]\nv_min = 0.0\n"), Err(ConfigError::Invalid(_))));
        let far = "[presets.blackboard]\nazimuth = 120.0\nelevation = 0.0\n[presets.canvas]\nazimuth = 0.0\nelevation = 0.0\n";
        assert!(matches!(SystemConfig::from_toml(far), Err(ConfigError::Invalid(_))));
    }
}
