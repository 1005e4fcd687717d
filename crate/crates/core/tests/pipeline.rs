use evbench_core::alignment::{
    associate, transform_trajectory, umeyama_align, AssociationMode, SimilarityTransform,
};
use evbench_core::diagnostics::{stereo_stream_ratio, windowed_event_counts};
use evbench_core::geometry::pose_norm;
use evbench_core::ingest::{
    parse_trajectory, parse_velocities, read_events_binary, write_events_binary, write_trajectory,
    write_velocities,
};
use evbench_core::metrics::WeightScheme;
use evbench_core::report::{evaluate, AlignMode, EvalConfig, VelocityInputs};
use evbench_core::synth::{
    perturb_trajectory, synth_event_rate_stream, synth_trajectory, MotionPattern, NoiseModel,
    PatternKind, RateProfile,
};
use evbench_core::{Pose, Rotation};
use nalgebra::Vector3;
use proptest::prelude::*;

fn lemniscate() -> evbench_core::synth::SynthTrajectory {
    synth_trajectory(&MotionPattern::new(
        PatternKind::Lemniscate {
            scale: 2.0,
            rate: 0.8,
        },
        8.0,
        100.0,
    ))
    .unwrap()
}

#[test]
fn files_round_trip_into_matching_reports() {
    let s = lemniscate();
    let mut traj_buf = Vec::new();
    write_trajectory(&s.trajectory, &mut traj_buf).unwrap();
    let mut vel_buf = Vec::new();
    write_velocities(&s.velocities, &mut vel_buf).unwrap();
    let traj = parse_trajectory(traj_buf.as_slice()).unwrap();
    let vel = parse_velocities(vel_buf.as_slice()).unwrap();

    let noisy = perturb_trajectory(
        &s.trajectory,
        &NoiseModel {
            position_sigma: 0.01,
            rotation_sigma: 0.002,
            seed: 5,
        },
    )
    .unwrap();
    let inputs = |v: &[_]| VelocityInputs {
        gt: Some(v.to_vec()),
        est: None,
    };
    let cfg = EvalConfig::default();
    let direct = evaluate(&s.trajectory, &noisy, &inputs(&s.velocities), &cfg).unwrap();
    let via_files = evaluate(&traj, &noisy, &inputs(&vel), &cfg).unwrap();
    // Parsing renormalizes quaternions, so rotations come back within an ulp.
    let close = |a: &[f64], b: &[f64]| {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
    };
    assert!(close(&direct.series.ate_full, &via_files.series.ate_full));
    assert!(close(&direct.series.rve, &via_files.series.rve));
    assert_eq!(direct.series.t, via_files.series.t);
    assert!((direct.headline.ate - via_files.headline.ate).abs() <= 1e-12);
    let auc = |r: &evbench_core::report::MetricReport| r.headline.auc.unwrap();
    assert!((auc(&direct) - auc(&via_files)).abs() <= 1.0 / 256.0);
    assert!(direct.ate.translation_only.rms > 0.0);
    assert!(direct.curve(WeightScheme::Combined).is_some());
}

#[test]
fn noise_lowers_auc_monotonically() {
    let s = lemniscate();
    let auc = |sigma: f64| {
        let est = perturb_trajectory(
            &s.trajectory,
            &NoiseModel {
                position_sigma: sigma,
                rotation_sigma: 0.0,
                seed: 11,
            },
        )
        .unwrap();
        let cfg = EvalConfig {
            align: AlignMode::None,
            ..EvalConfig::default()
        };
        evaluate(&s.trajectory, &est, &VelocityInputs::default(), &cfg)
            .unwrap()
            .headline
            .auc
            .unwrap()
    };
    let (a, b, c) = (auc(0.0), auc(0.001), auc(0.01));
    assert!(a >= b && b >= c, "{a} {b} {c}");
    assert!(a - c > 0.05);
}

#[test]
fn binary_events_round_trip_and_diagnose() {
    let left = synth_event_rate_stream(&RateProfile::constant(2400.0, 1.0), 346, 260, 3).unwrap();
    let right = synth_event_rate_stream(&RateProfile::constant(2188.0, 1.0), 346, 260, 4).unwrap();
    let mut buf = Vec::new();
    write_events_binary(&left, &mut buf).unwrap();
    let back = read_events_binary(buf.as_slice(), "synth").unwrap();
    assert_eq!(back.events(), left.events());
    assert_eq!((back.width, back.height), (346, 260));

    let r = stereo_stream_ratio(&back, &right).unwrap();
    let exact = 100.0 * (left.len() as f64 - right.len() as f64) / right.len() as f64;
    assert!((r.ratio_percent - exact).abs() <= 1e-12 * exact.abs().max(1.0));
    let w = windowed_event_counts(&back, 0.25).unwrap();
    assert_eq!(w.counts.iter().sum::<u64>(), left.len() as u64);
}

fn similarity() -> impl Strategy<Value = SimilarityTransform> {
    (
        prop::array::uniform3(-1.0..1.0f64),
        0.05..3.0f64,
        prop::array::uniform3(-5.0..5.0f64),
        0.2..5.0f64,
    )
        .prop_filter("axis", |(a, ..)| Vector3::from(*a).norm() > 1e-3)
        .prop_map(|(axis, angle, t, s)| {
            SimilarityTransform::new(
                s,
                Pose::new(Rotation::from_axis_angle(&Vector3::from(axis), angle), Vector3::from(t)),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn umeyama_inverts_transformed_trajectory(sim in similarity()) {
        let gt = lemniscate().trajectory;
        let moved = transform_trajectory(&gt, &sim);
        let pairs = associate(&moved, &gt, 1e-6, AssociationMode::Nearest).unwrap();
        let found = umeyama_align(&pairs, true).unwrap();
        let inv = sim.inverse();
        prop_assert!((found.scale - inv.scale).abs() < 1e-8);
        prop_assert!(pose_norm(&found.pose.between(&inv.pose)) < 1e-8);
    }
}
