use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reclass_core::config::SystemConfig;
use reclass_core::gesture::{GestureConfig, PoseLabel};
use reclass_core::motion::MotorState;
use reclass_core::protocol::{
    crc8, decode, decode_ui, encode, encode_ui, ControlFrame, DecodeError, FrameDecoder, SimCommand, UiError,
    UiMessage, SYNC,
};
use reclass_core::rig::{RigId, RigSnapshot};
use reclass_core::sim::body::{synthesize_pose_frames, Pose};
use reclass_core::sim::live::LiveSession;
use reclass_core::skeleton::{JointId, SkeletonFrame, Vec3};

fn frame() -> impl Strategy<Value = ControlFrame> {
    let motor = 0u8..3;
    prop_oneof![
        (motor.clone(), any::<i16>()).prop_map(|(motor, steps)| ControlFrame::MoveAbs { motor, steps }),
        (motor.clone(), any::<i16>()).prop_map(|(motor, steps)| ControlFrame::MoveRel { motor, steps }),
        motor.clone().prop_map(|motor| ControlFrame::Stop { motor }),
        (motor.clone(), 1u16..5000, 0u16..5000)
            .prop_map(|(motor, v_min, extra)| ControlFrame::SetProfile { motor, v_min, v_max: v_min.saturating_add(extra) }),
        (0u8..32).prop_map(|mask| ControlFrame::LedSet { mask }),
        motor.clone().prop_map(|motor| ControlFrame::StatusReq { motor }),
        (motor, any::<i16>(), 0u8..4).prop_map(|(motor, position, state)| ControlFrame::Status { motor, position, state }),
    ]
}

/// Junk that cannot itself start a frame.
fn junk() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(any::<u8>().prop_filter("not sync", |b| *b != SYNC), 0..=64)
}

proptest! {
    #[test]
    fn wire_round_trip(f in frame()) {
        let bytes = encode(&f).unwrap();
        prop_assert_eq!(bytes[0], SYNC);
        prop_assert_eq!(bytes.len(), bytes[1] as usize + 3);
        prop_assert_eq!(decode(&bytes).unwrap(), f);
    }

    #[test]
    fn resync_through_junk(parts in prop::collection::vec((junk(), frame()), 1..10), tail in junk()) {
        let mut stream = Vec::new();
        for (j, f) in &parts {
            stream.extend(j);
            stream.extend(encode(f).unwrap());
        }
        stream.extend(&tail);
        let mut dec = FrameDecoder::new();
        // Feed in small, uneven chunks.
        for chunk in stream.chunks(5) {
            dec.push(chunk);
        }
        let got: Vec<ControlFrame> = dec.drain().into_iter().filter_map(Result::ok).collect();
        let want: Vec<ControlFrame> = parts.iter().map(|(_, f)| *f).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn every_single_bit_flip_is_caught(f in frame(), which in any::<prop::sample::Index>(), bit in 0u8..8) {
        let bytes = encode(&f).unwrap();
        // Flip a bit in len, cmd, or payload.
        let i = 1 + which.index(bytes.len() - 2);
        let mut bad = bytes.clone();
        bad[i] ^= 1 << bit;
        let end = bad.len() - 1;
        prop_assert_ne!(crc8(&bad[1..end]), bad[end]);
        prop_assert!(decode(&bad).is_err());
        if i >= 2 {
            let crc_err = matches!(decode(&bad), Err(DecodeError::Crc { .. }));
            prop_assert!(crc_err, "payload flip not reported as a crc error");
        }
    }
}

#[test]
fn frozen_wire_images() {
    assert_eq!(crc8(b"123456789"), 0xF4);
    assert_eq!(encode(&ControlFrame::Stop { motor: 1 }).unwrap(), [0xA5, 0x02, 0x03, 0x01, 0xEE]);
    assert_eq!(encode(&ControlFrame::LedSet { mask: 1 }).unwrap(), [0xA5, 0x02, 0x05, 0x01, 0x90]);
    assert_eq!(
        encode(&ControlFrame::MoveAbs { motor: 0, steps: 0 }).unwrap(),
        [0xA5, 0x04, 0x01, 0x00, 0x00, 0x00, 0x99]
    );
}

#[test]
fn invalid_frames_do_not_encode() {
    assert!(encode(&ControlFrame::Stop { motor: 3 }).is_err());
    assert!(encode(&ControlFrame::LedSet { mask: 0x20 }).is_err());
    assert!(encode(&ControlFrame::SetProfile { motor: 0, v_min: 10, v_max: 5 }).is_err());
}

#[test]
fn resync_with_arbitrary_junk() {
    // Junk may contain the sync byte; a false frame is then possible but
    // rare, so check recovery on a fixed stream.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut stream = Vec::new();
    let mut want = Vec::new();
    for k in 0..300 {
        let n = rng.gen_range(0..=64);
        stream.extend((0..n).map(|_| rng.gen::<u8>()));
        let f = ControlFrame::MoveRel { motor: (k % 3) as u8, steps: rng.gen() };
        stream.extend(encode(&f).unwrap());
        want.push(f);
    }
    let mut dec = FrameDecoder::new();
    dec.push(&stream);
    let got: Vec<_> = dec.drain().into_iter().filter_map(Result::ok).collect();
    let mut it = got.iter();
    let found = want.iter().filter(|w| it.any(|g| g == *w)).count();
    assert!(found >= 299, "recovered {found} of 300");
}

#[test]
fn rig_status_round_trips() {
    let snap = |rig, azimuth| RigSnapshot {
        rig,
        azimuth,
        elevation: -3.15,
        pan_steps: -7,
        tilt_steps: 12,
        pan_state: MotorState::RampDown,
        tilt_state: MotorState::Stopped,
    };
    let m = UiMessage::Rig { t: 12.345, s1: snap(RigId::S1, 12.6), s2: snap(RigId::S2, -0.45) };
    let line = encode_ui(&m);
    assert_eq!(decode_ui(&line).unwrap(), m);
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["type"], "rig");
    assert_eq!(v["s1"]["pan_state"], "ramp_down");
}

#[test]
fn skeleton_message_round_trips() {
    let f = synthesize_pose_frames(Pose::Speaker, Vec3::new(0.1, -0.2, 2.4), 1.0, 0.1, 30.0).unwrap().remove(0);
    let m = UiMessage::Skeleton { frame: f };
    assert_eq!(decode_ui(&encode_ui(&m)).unwrap(), m);
}

/// Canvas predicate written out directly from the joint geometry.
fn is_canvas(f: &SkeletonFrame) -> bool {
    let p = |id| f.position(id);
    let (head, hip, sl) = (p(JointId::Head), p(JointId::HipCenter), p(JointId::ShoulderLeft));
    let (wl, wr) = (p(JointId::WristLeft), p(JointId::WristRight));
    wr.y > head.y + 0.10 && !(wl.y > head.y + 0.10) && wl.y < hip.y + 0.10 && (wl.x - sl.x).abs() < 0.25
}

#[test]
fn canvas_pose_request_yields_canvas_frames() {
    let m = decode_ui(r#"{"type":"pose","name":"canvas","duration":2.5}"#).unwrap();
    let UiMessage::Pose { name, duration } = m else { panic!("not a pose") };
    let frames = synthesize_pose_frames(Pose::parse(&name).unwrap(), Vec3::new(0.0, -0.25, 2.5), 0.0, duration, 30.0).unwrap();
    assert_eq!(frames.len(), 75);
    assert!(frames.iter().all(is_canvas));
    let cfg = GestureConfig::default();
    assert!(frames.iter().all(|f| reclass_core::gesture::classify_pose(f, &cfg) == PoseLabel::Canvas));

    // End to end through a live session.
    let mut live = LiveSession::new(&SystemConfig::default()).unwrap();
    live.step(0.5).unwrap();
    assert!(live.handle(UiMessage::Pose { name, duration }).is_empty());
    let out = live.step(3.0).unwrap();
    let events: Vec<_> = out
        .iter()
        .filter_map(|m| match m {
            UiMessage::Gesture { event } => Some(event.label),
            _ => None,
        })
        .collect();
    assert_eq!(events, vec![PoseLabel::Canvas]);
}

#[test]
fn unknown_and_malformed_lines() {
    assert_eq!(decode_ui(r#"{"type":"zzz"}"#), Err(UiError::UnknownType("zzz".into())));
    assert!(matches!(decode_ui("{\"type\":\"pose\""), Err(UiError::Malformed(_))));
    assert!(matches!(decode_ui(r#"{"type":"command","command":{"action":"fly"}}"#), Err(UiError::Malformed(_))));

    // A rejected line leaves the session untouched.
    let live = LiveSession::new(&SystemConfig::default()).unwrap();
    let before: Vec<String> = live.snapshot().iter().map(encode_ui).collect();
    assert!(decode_ui(r#"{"type":"zzz"}"#).is_err());
    let after: Vec<String> = live.snapshot().iter().map(encode_ui).collect();
    assert_eq!(before, after);
}

#[test]
fn commands_round_trip() {
    use reclass_core::director::SceneMode;
    let cmds = [
        SimCommand::Start,
        SimCommand::Stop,
        SimCommand::LoadTrace { trace: "#reclass-trace v1 rate=30 frame=y-up-z-forward\n".into() },
        SimCommand::SetPreset { scene: SceneMode::Canvas, azimuth: 12.0, elevation: 3.0 },
        SimCommand::MoveSpeaker { x: 2.0, z: 1.5 },
    ];
    for c in cmds {
        let m = UiMessage::Command { command: c };
        assert_eq!(decode_ui(&encode_ui(&m)).unwrap(), m);
    }
}
