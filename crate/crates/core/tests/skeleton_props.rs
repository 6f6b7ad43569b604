use proptest::prelude::*;

use reclass_core::skeleton::{
    joint_of, parse_trace, resample, serialize_trace, Joint, JointId, SkeletonFrame, Trace, TrackState, Vec3,
    MAX_COORD,
};

fn coord() -> impl Strategy<Value = f64> {
    -MAX_COORD..MAX_COORD
}

fn track() -> impl Strategy<Value = TrackState> {
    prop_oneof![Just(TrackState::Tracked), Just(TrackState::Inferred), Just(TrackState::NotTracked)]
}

fn joints() -> impl Strategy<Value = Vec<(f64, f64, f64, TrackState)>> {
    prop::collection::vec((coord(), coord(), coord(), track()), JointId::COUNT)
}

fn frame_at(t: f64, present: bool, js: &[(f64, f64, f64, TrackState)]) -> SkeletonFrame {
    let joints: Vec<Joint> = JointId::ALL
        .iter()
        .zip(js)
        .map(|(id, &(x, y, z, track))| Joint { id: *id, position: Vec3::new(x, y, z), track })
        .collect();
    SkeletonFrame::new(t, present, &joints).unwrap()
}

prop_compose! {
    fn trace()(
        gaps in prop::collection::vec(0.001f64..0.2, 1..12),
        t0 in 0.0f64..100.0,
        rate in 1.0f64..120.0,
    )(
        frames in prop::collection::vec((any::<bool>(), joints()), gaps.len()),
        gaps in Just(gaps),
        t0 in Just(t0),
        rate in Just(rate),
    ) -> Trace {
        let mut t = t0;
        let frames = frames
            .iter()
            .zip(&gaps)
            .map(|((present, js), g)| {
                t += g;
                frame_at(t, *present, js)
            })
            .collect();
        Trace::new(frames, rate).unwrap()
    }
}

proptest! {
    #[test]
    fn serialize_parse_round_trip(tr in trace()) {
        let text = serialize_trace(&tr);
        let back = parse_trace(text.as_bytes()).unwrap();
        prop_assert_eq!(back, tr);
    }

    #[test]
    fn resample_is_idempotent(tr in trace(), rate in 5.0f64..60.0) {
        let once = resample(&tr, rate).unwrap();
        let twice = resample(&once, rate).unwrap();
        prop_assert_eq!(once.len(), twice.len());
        for (a, b) in once.frames().iter().zip(twice.frames()) {
            prop_assert!((a.t() - b.t()).abs() <= 1e-9);
            for (ja, jb) in a.joints().iter().zip(b.joints()) {
                prop_assert!((ja.position - jb.position).norm() <= 1e-9);
                prop_assert_eq!(ja.track, jb.track);
            }
        }
    }

    #[test]
    fn interpolation_stays_in_bracket_box(tr in trace(), rate in 5.0f64..60.0) {
        let out = resample(&tr, rate).unwrap();
        let src = tr.frames();
        for f in out.frames() {
            let i = src.partition_point(|s| s.t() <= f.t() + 1e-12);
            let lo = &src[i.saturating_sub(1)];
            let hi = &src[i.min(src.len() - 1)];
            for id in JointId::ALL {
                let (a, b, p) = (lo.position(id), hi.position(id), f.position(id));
                for ((ca, cb), cp) in a.components().iter().zip(b.components()).zip(p.components()) {
                    prop_assert!(cp >= ca.min(cb) - 1e-9 && cp <= ca.max(cb) + 1e-9);
                }
                prop_assert!(f.joint(id).track <= lo.joint(id).track.max(hi.joint(id).track));
            }
        }
    }

    #[test]
    fn joint_lookup_matches_id(js in joints(), k in 0usize..JointId::COUNT) {
        let f = frame_at(0.0, true, &js);
        let id = JointId::ALL[k];
        prop_assert_eq!(joint_of(&f, id).id, id);
        prop_assert_eq!(joint_of(&f, id).position, Vec3::new(js[k].0, js[k].1, js[k].2));
    }
}

fn still(t: f64, x: f64, track: TrackState) -> SkeletonFrame {
    let js: Vec<_> = (0..JointId::COUNT).map(|_| (x, 1.0, 2.0, track)).collect();
    frame_at(t, true, &js)
}

#[test]
fn same_rate_keeps_timestamps() {
    let frames = (0..10).map(|k| still(k as f64 / 30.0, 0.0, TrackState::Tracked)).collect();
    let tr = Trace::new(frames, 30.0).unwrap();
    let out = resample(&tr, 30.0).unwrap();
    let ts: Vec<f64> = out.frames().iter().map(|f| f.t()).collect();
    let orig: Vec<f64> = tr.frames().iter().map(|f| f.t()).collect();
    assert_eq!(ts.len(), orig.len());
    for (a, b) in ts.iter().zip(&orig) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn linear_interpolation_and_weaker_state() {
    let tr = Trace::new(vec![still(0.0, 0.0, TrackState::Tracked), still(1.0, 1.0, TrackState::Inferred)], 1.0).unwrap();
    let out = resample(&tr, 4.0).unwrap();
    assert_eq!(out.len(), 5);
    let q = &out.frames()[1];
    assert!((q.t() - 0.25).abs() < 1e-12);
    assert!((q.position(JointId::Head).x - 0.25).abs() < 1e-12);
    assert_eq!(q.joint(JointId::Head).track, TrackState::Inferred);
}

#[test]
fn empty_trace_cannot_resample() {
    assert!(resample(&Trace::empty(), 30.0).is_err());
}

#[test]
fn rejected_trace_texts() {
    assert!(parse_trace(b"#reclass-trace v1 rate=0 frame=y-up-z-forward\n").is_err());
    assert!(parse_trace(b"garbage\n").is_err());
    let f = still(0.5, 0.0, TrackState::Tracked);
    let tr = Trace::new(vec![f.clone()], 30.0).unwrap();
    let text = serialize_trace(&tr);
    let doubled = format!("{text}{}", text.lines().nth(1).unwrap());
    assert!(parse_trace(doubled.as_bytes()).is_err());
}
