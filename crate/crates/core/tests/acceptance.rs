//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reclass_core::config::SystemConfig;
use reclass_core::gesture::{GestureConfig, HoldTimer};
use reclass_core::motion::{build_profile, plan_move, MotorFsm, MotorState};
use reclass_core::protocol::wire::{decode, encode, ControlFrame, FrameDecoder, SYNC};
use reclass_core::session::{export_edl, parse_edl, FPS};
use reclass_core::sim::body::{synthesize_pose_frames, Pose};
use reclass_core::sim::corpus::{generate_corpus, CorpusSpec, TruthClass};
use reclass_core::sim::eval::{run_eval, success_rates, ConfusionMatrix};
use reclass_core::sim::scenario::{class_script, run_scenario, tracking_walk, ScenarioInput, ScenarioScript};
use reclass_core::sim::NoiseModel;
use reclass_core::skeleton::Vec3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ── Clean corpus ───────────────────────────────────────────

fn clean_corpus() -> Outcome {
    let began = Instant::now();
    let spec = CorpusSpec::default().clean();
    let corpus = generate_corpus(&spec, 2024).expect("corpus");
    let m = run_eval(&corpus.trace, &corpus.truth, &GestureConfig::default()).expect("eval");
    let secs = began.elapsed().as_secs_f64();
    let mut expected = ConfusionMatrix::default();
    for i in 0..6 {
        expected.counts[i][i] = 20;
    }
    outcome(m == expected && secs < 10.0, format!("diagonal={} of {}, runtime {secs:.2} s", m.diagonal(), m.total()))
}

// ── Noisy floors ───────────────────────────────────────────

fn noisy_floors() -> Outcome {
    let spec = CorpusSpec::default();
    assert_eq!((spec.noise_sigma, spec.dropout_prob), (0.02, 0.05));
    let cfg = GestureConfig::default();
    let mut total = ConfusionMatrix::default();
    for seed in 1..=10u64 {
        let c = generate_corpus(&spec, seed).expect("corpus");
        let m = run_eval(&c.trace, &c.truth, &cfg).expect("eval");
        for (r, row) in m.counts.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                total.counts[r][k] += v;
            }
        }
    }
    let floors = [
        (TruthClass::Start, 0.85),
        (TruthClass::Stop, 0.85),
        (TruthClass::Blackboard, 0.95),
        (TruthClass::Canvas, 0.85),
        (TruthClass::Speaker, 0.95),
        (TruthClass::Undefined, 0.80),
    ];
    let rates = success_rates(&total).expect("rates");
    let mut pass = true;
    let mut parts = Vec::new();
    for ((class, rate), (c2, floor)) in rates.iter().zip(floors) {
        assert_eq!(*class, c2);
        pass &= *rate >= floor;
        parts.push(format!("{class} {:.1}%", rate * 100.0));
    }
    outcome(pass, parts.join(", "))
}

// ── Hold timing ────────────────────────────────────────────

/// Events from one uninterrupted hold of `hold` seconds between neutral
/// stretches, at 30 Hz.
fn events_for_hold(hold: f64) -> usize {
    let cfg = GestureConfig::default();
    let hip = Vec3::new(0.0, -0.25, 2.5);
    let k_hold = (hold * 30.0).round() as usize;
    let mut frames = synthesize_pose_frames(Pose::Neutral, hip, 0.0, 1.0, 30.0).unwrap();
    let pose = synthesize_pose_frames(Pose::Canvas, hip, 0.0, (k_hold + 1) as f64 / 30.0, 30.0).unwrap();
    let after = synthesize_pose_frames(Pose::Neutral, hip, 0.0, 2.0, 30.0).unwrap();
    let mut k = frames.len();
    for f in pose.iter().chain(after.iter()) {
        frames.push(f.with_time(k as f64 / 30.0).unwrap());
        k += 1;
    }
    let mut timer = HoldTimer::new();
    frames.iter().filter(|f| timer.update(f, &cfg).unwrap().is_some()).count()
}

fn hold_timing() -> Outcome {
    let (a, b, c) = (events_for_hold(1.9), events_for_hold(2.0), events_for_hold(3.5));
    outcome((a, b, c) == (0, 1, 1), format!("1.9 s -> {a}, 2.0 s -> {b}, 3.5 s -> {c}"))
}

// ── Motion ─────────────────────────────────────────────────

fn motion_triples() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let v_min = rng.gen_range(20.0..400.0);
        let v_max = v_min * rng.gen_range(1.0..12.0);
        let n = rng.gen_range(2..=128);
        let profile = build_profile(v_min, v_max, n).unwrap();
        let table = profile.table().to_vec();
        let start = rng.gen_range(-3000i64..=3000);
        let target = rng.gen_range(-3000i64..=3000);
        let fsm = MotorFsm::new(0, profile.clone()).at_position(start);

        // Move from rest, checked against the closed-form schedule.
        let sched = plan_move(&fsm, target, &profile);
        let d = (target - start).unsigned_abs() as usize;
        let gaps = sched.gaps();
        let last_state = sched.events.last().map(|e| e.state);
        let arrived = sched.end_position().unwrap_or(start) == target
            && (d == 0 || last_state == Some(MotorState::Stopped))
            && gaps.len() == d;
        let exact = gaps
            .iter()
            .enumerate()
            .all(|(k, g)| (g - table[k.min(d - 1 - k).min(n - 1)]).abs() <= 1e-9);
        let half = d / 2;
        let monotone = gaps[..half].windows(2).all(|w| w[1] <= w[0] + 1e-12)
            && gaps[half..].windows(2).all(|w| w[1] + 1e-12 >= w[0]);
        let symmetric = (0..d).all(|k| (gaps[k] - gaps[d - 1 - k]).abs() <= 1e-9);
        let one_way = sched.events.iter().all(|e| e.direction as i64 == (target - start).signum());
        if !(arrived && exact && monotone && symmetric && one_way) {
            failures.push(format!("#{trial} rest move {start}->{target} N={n}"));
            continue;
        }

        // Retarget mid-move; a reversal must pass through Stopped.
        let second = rng.gen_range(-3000i64..=3000);
        let mut m = fsm.clone();
        m.set_target(target, 0.0);
        let cut = sched.events.get(rng.gen_range(0..=d.max(1) - 1)).map_or(0.0, |e| e.time);
        let mut events = Vec::new();
        while let Some(ev) = m.tick(cut).unwrap() {
            events.push(ev);
        }
        m.set_target(second, cut);
        let mut now = cut;
        while !m.is_idle() && now < 1e4 {
            now = m.next_step_at().unwrap_or(now);
            while let Some(ev) = m.tick(now).unwrap() {
                events.push(ev);
            }
        }
        let mut ok = m.position() == second && m.state() == MotorState::Stopped;
        let mut pos = start;
        for w in events.windows(2) {
            if w[1].direction != w[0].direction && w[0].state != MotorState::Stopped {
                ok = false;
            }
        }
        for e in &events {
            pos += e.direction as i64;
            ok &= pos == e.position;
        }
        if !ok {
            failures.push(format!("#{trial} retarget {start}->{target}->{second} N={n}"));
        }
    }
    outcome(failures.is_empty(), if failures.is_empty() { "1000/1000 triples".into() } else { failures.join("; ") })
}

// ── Tracking ───────────────────────────────────────────────

fn tracking() -> Outcome {
    let cfg = SystemConfig::default();
    let script = tracking_walk(0.5, 5.5, 1.5, 0.5);
    let dur = script.duration();
    let input = ScenarioInput::Script(ScenarioScript {
        script,
        noise: NoiseModel { sigma: 0.02, dropout: 0.05 },
        seed: 11,
        rate: 30.0,
    });
    let logs = run_scenario(&cfg, &input, dur).expect("scenario");
    let bound = cfg.director.deadband + cfg.s1.pan_motor.degrees_per_step();
    let samples = &logs.tracking;
    let Some(first) = samples.iter().position(|s| s.present && s.error.abs() <= bound) else {
        return outcome(false, "speaker never acquired");
    };
    let after = &samples[first..];
    let within = after.iter().filter(|s| s.error.abs() <= bound).count();
    let frac = within as f64 / after.len() as f64;

    let edl_ok = match export_edl(&logs.edl).map(|t| parse_edl(&t)) {
        Ok(Ok(parsed)) => {
            parsed.segments.iter().all(|s| {
                s.ticks.iter().enumerate().all(|(k, t)| (t.t - (s.start + (k + 1) as f64 / FPS)).abs() <= 1e-6)
            }) && parsed.total_ticks() > 0
        }
        _ => false,
    };
    outcome(
        frac >= 0.95 && edl_ok,
        format!(
            "{:.1}% of {} frames within {bound:.1} deg; EDL grid {} ({} ticks)",
            frac * 100.0,
            after.len(),
            if edl_ok { "ok" } else { "VIOLATED" },
            logs.edl.total_ticks()
        ),
    )
}

// ── Protocol ───────────────────────────────────────────────

fn random_frame<R: Rng>(rng: &mut R) -> ControlFrame {
    let motor = rng.gen_range(0..3);
    match rng.gen_range(0..7) {
        0 => ControlFrame::MoveAbs { motor, steps: rng.gen() },
        1 => ControlFrame::MoveRel { motor, steps: rng.gen() },
        2 => ControlFrame::Stop { motor },
        3 => {
            let v_min = rng.gen_range(1..=u16::MAX);
            ControlFrame::SetProfile { motor, v_min, v_max: rng.gen_range(v_min..=u16::MAX) }
        }
        4 => ControlFrame::LedSet { mask: rng.gen_range(0..32) },
        5 => ControlFrame::StatusReq { motor },
        _ => ControlFrame::Status { motor, position: rng.gen(), state: rng.gen_range(0..4) },
    }
}

fn protocol() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut round_trip = 0;
    for _ in 0..10_000 {
        let f = random_frame(&mut rng);
        if decode(&encode(&f).unwrap()) == Ok(f) {
            round_trip += 1;
        }
    }

    let mut stream = Vec::new();
    let mut sent = Vec::new();
    for _ in 0..2_000 {
        let junk = rng.gen_range(0..=64);
        stream.extend((0..junk).map(|_| loop {
            let b: u8 = rng.gen();
            if b != SYNC {
                break b;
            }
        }));
        let f = random_frame(&mut rng);
        stream.extend(encode(&f).unwrap());
        sent.push(f);
    }
    let mut dec = FrameDecoder::new();
    let mut got = Vec::new();
    for chunk in stream.chunks(17) {
        dec.push(chunk);
        got.extend(dec.drain().into_iter().filter_map(Result::ok));
    }
    let resync = got == sent;

    let mut detected = 0;
    for _ in 0..10_000 {
        let f = random_frame(&mut rng);
        let mut bytes = encode(&f).unwrap();
        let bit = rng.gen_range(0..bytes.len() * 8);
        bytes[bit / 8] ^= 1 << (bit % 8);
        if decode(&bytes).is_err() {
            detected += 1;
        }
    }
    outcome(
        round_trip == 10_000 && resync && detected == 10_000,
        format!(
            "round-trip {round_trip}/10000, resync {}/{} frames, bit flips detected {detected}/10000",
            got.len(),
            sent.len()
        ),
    )
}

// ── Determinism ────────────────────────────────────────────

fn determinism() -> Outcome {
    let cfg = SystemConfig::default();
    let spec = CorpusSpec { instances_per_gesture: 3, ..CorpusSpec::default() };
    let (script, _) = class_script(&spec, cfg.room.width, 31);
    let dur = script.duration();
    let input = ScenarioInput::Script(ScenarioScript { script, noise: spec.noise(), seed: 31, rate: 30.0 });
    let a = run_scenario(&cfg, &input, dur).expect("scenario");
    let b = run_scenario(&cfg, &input, dur).expect("scenario");
    let edl_a = export_edl(&a.edl).unwrap();
    let same = edl_a == export_edl(&b.edl).unwrap()
        && a.wire_out == b.wire_out
        && a.wire_in == b.wire_in
        && a.rig_text() == b.rig_text()
        && a.director_text() == b.director_text();
    outcome(
        same && !a.edl.segments.is_empty(),
        format!("{} EDL bytes, {} wire bytes, {} segments", edl_a.len(), a.wire_out.len(), a.edl.segments.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("clean-corpus perfection", clean_corpus),
        ("noisy-regime floors", noisy_floors),
        ("hold-window timing", hold_timing),
        ("motion exactness and smoothness", motion_triples),
        ("tracking and EDL grid", tracking),
        ("protocol round-trip, resync, CRC", protocol),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let began = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{:.1} s]", o.detail, began.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
