//! Gesture-driven lecture capture: skeleton ingestion, pose classification,
//! stepper motion planning, rig kinematics, scene direction, session
//! recording, the controller link and a deterministic simulation harness.

pub mod director;
pub mod gesture;
pub mod motion;
pub mod protocol;
pub mod rig;
pub mod session;
pub mod skeleton;
pub mod config;
pub mod sim;
