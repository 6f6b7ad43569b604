use proptest::prelude::*;

use reclass_core::motion::{MotionProfile, MotorState};
use reclass_core::rig::{
    angle_diff, Rig, RigGeometry, RigId, TiltDrive, MOTOR_S1_PAN, MOTOR_S2_PAN, MOTOR_S2_TILT,
};
use reclass_core::skeleton::Vec3;

fn rig(id: RigId) -> Rig {
    let g = match id {
        RigId::S1 => RigGeometry::default_s1(),
        RigId::S2 => RigGeometry::default_s2(),
    };
    Rig::new(id, g, &MotionProfile::default())
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (-8.0f64..8.0, -3.0f64..3.0, -8.0f64..8.0).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

#[derive(Debug, Clone)]
enum Op {
    Pan(i64),
    Tilt(i64),
    Advance(f64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (-400i64..400).prop_map(Op::Pan),
        (-400i64..400).prop_map(Op::Tilt),
        (0.0f64..0.5).prop_map(Op::Advance),
    ]
}

#[test]
fn elevation_of_a_raised_point() {
    let r = rig(RigId::S1);
    let m = r.geometry.mount_position;
    let (az, el) = r.bearing_to(m + Vec3::new(0.0, 1.0, -4.0)).unwrap();
    // Opposite 1, hypotenuse sqrt(17).
    let expected = (1.0 / 17f64.sqrt()).asin().to_degrees();
    assert!(az.abs() < 1e-12);
    assert!((el - expected).abs() < 1e-9);
    assert!((el - 14.036).abs() < 1e-3);
}

#[test]
fn long_advance_completes_a_move() {
    let mut r = rig(RigId::S2);
    r.move_pan(200);
    let events = r.advance(10.0);
    assert_eq!(events.len(), 200);
    assert_eq!(r.state.pan_steps(), 200);
    assert_eq!(r.state.pan.state(), MotorState::Stopped);
    assert!((r.orientation().0 - 200.0 * 1.8 / 4.0).abs() < 1e-12);
}

#[test]
fn servo_tilt_is_rate_limited() {
    let g = RigGeometry { tilt: TiltDrive::Servo { slew: 5.0, unit: 0.1 }, ..RigGeometry::default_s1() };
    let mut r = Rig::new(RigId::S1, g, &MotionProfile::default());
    r.move_tilt(r.tilt_steps_for(10.0));
    r.advance(1.0);
    assert!((r.orientation().1 - 5.0).abs() < 1e-9);
    assert!(r.advance(0.0).is_empty());
    assert!((r.orientation().1 - 5.0).abs() < 1e-9);
}

#[test]
fn motors_are_addressed_distinctly() {
    let (s1, s2) = (rig(RigId::S1), rig(RigId::S2));
    assert_eq!(s1.state.pan.motor(), MOTOR_S1_PAN);
    assert_eq!(s2.state.pan.motor(), MOTOR_S2_PAN);
    let mut s2 = s2;
    s2.move_tilt(10);
    let ev = s2.advance(2.0);
    assert!(ev.iter().all(|e| e.motor == MOTOR_S2_TILT));
}

#[test]
fn geometry_validation() {
    assert!(RigGeometry::default_s1().validate().is_ok());
    assert!(RigGeometry::default_s2().validate().is_ok());
    assert!(RigGeometry { pan_limits: (10.0, -10.0), ..RigGeometry::default_s1() }.validate().is_err());
    assert!(RigGeometry { fov_h: 180.0, ..RigGeometry::default_s1() }.validate().is_err());
}

proptest! {
    #[test]
    fn bearing_and_fov_ignore_translation(p in vec3(), shift in vec3(), pan in -40i64..40) {
        let mut a = rig(RigId::S1);
        a.move_pan(pan);
        a.advance(5.0);
        let mut b = a.clone();
        b.geometry.mount_position = a.geometry.mount_position + shift;
        let pa = a.geometry.mount_position + p;
        let pb = b.geometry.mount_position + p;
        prop_assume!(p.norm() > 1e-3);
        let (az_a, el_a) = a.bearing_to(pa).unwrap();
        let (az_b, el_b) = b.bearing_to(pb).unwrap();
        prop_assert!(angle_diff(az_a, az_b).abs() < 1e-9 && (el_a - el_b).abs() < 1e-9);
        // Skip points within rounding of the field-of-view edge.
        let (cur_az, cur_el) = a.orientation();
        prop_assume!((angle_diff(az_a, cur_az).abs() - a.geometry.fov_h / 2.0).abs() > 1e-6);
        prop_assume!(((el_a - cur_el).abs() - a.geometry.fov_v / 2.0).abs() > 1e-6);
        prop_assert_eq!(a.in_fov(pa), b.in_fov(pb));
    }

    #[test]
    fn limits_hold_for_any_commands(ops in prop::collection::vec(op(), 1..30), s2 in any::<bool>()) {
        let mut r = rig(if s2 { RigId::S2 } else { RigId::S1 });
        let (plo, phi) = r.geometry.pan_limits;
        let (tlo, thi) = r.geometry.tilt_limits;
        for op in ops {
            match op {
                Op::Pan(s) => r.move_pan(s),
                Op::Tilt(s) => r.move_tilt(s),
                Op::Advance(dt) => {
                    r.advance(dt);
                }
            }
            let (az, el) = r.orientation();
            prop_assert!(az >= plo - 1e-9 && az <= phi + 1e-9, "azimuth {az}");
            prop_assert!(el >= tlo - 1e-9 && el <= thi + 1e-9, "elevation {el}");
        }
    }

    #[test]
    fn azimuth_moves_one_step_per_event(targets in prop::collection::vec(-200i64..200, 1..4)) {
        let mut r = rig(RigId::S2);
        let per_step = r.geometry.pan_motor.degrees_per_step();
        for target in targets {
            r.move_pan(target);
            for _ in 0..300 {
                let before = r.orientation().0;
                let events = r.advance(0.001);
                let pan_events = events.iter().filter(|e| e.motor == MOTOR_S2_PAN).count();
                let moved = (r.orientation().0 - before).abs();
                prop_assert!(moved <= pan_events as f64 * per_step + 1e-9);
            }
        }
    }

    #[test]
    fn sensor_frame_round_trips(p in vec3(), pan in -50i64..50, tilt in -270i64..270) {
        let mut r = rig(RigId::S1);
        r.move_pan(pan);
        r.move_tilt(tilt);
        r.advance(60.0);
        let back = r.sensor_to_room(r.room_to_sensor(p));
        prop_assert!((back - p).norm() < 1e-9);
        // Boresight points map to the sensor's forward axis.
        let (_, _, fwd) = r.basis();
        let s = r.room_to_sensor(r.geometry.mount_position + fwd * 2.0);
        prop_assert!((s - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-9);
    }
}
