//! Simulated streams through alignment and the online estimator.

use wristband_core::evaluation::THETA_Y;
use wristband_core::{
    align_streams, emit_streams, mean_error, r_squared, AlignedSample, Error, OnlineConfig, ScenarioConfig,
};

fn aligned(preset: &str, seed: u64) -> Vec<AlignedSample> {
    let mut scenario = ScenarioConfig::preset(preset).unwrap();
    scenario.trajectory.seed = seed;
    let streams = emit_streams(&scenario).unwrap();
    align_streams(&streams.strain, &streams.imu).unwrap()
}

fn scores(stream: &[AlignedSample], config: &OnlineConfig) -> (f64, f64) {
    let run = wristband_core::run_online(stream, config).unwrap();
    let truth: Vec<f64> = stream[run.cutoff..].iter().map(|s| s.theta_avg[THETA_Y]).collect();
    let est: Vec<f64> = run.estimates.iter().map(|e| e.theta[THETA_Y]).collect();
    (r_squared(&truth, &est).unwrap(), mean_error(&truth, &est).unwrap())
}

#[test]
fn clean_scenario_tracks_truth() {
    let stream = aligned("clean", 3);
    let (r2, mae) = scores(&stream, &OnlineConfig { seed: 3, ..Default::default() });
    assert!(r2 >= 0.99, "r2 {r2}");
    assert!(mae <= 2.0, "mae {mae}");
}

#[test]
fn degraded_scenarios_remain_usable() {
    for preset in ["nominal", "misaligned"] {
        let stream = aligned(preset, 5);
        let (r2, mae) = scores(&stream, &OnlineConfig { seed: 5, ..Default::default() });
        assert!(r2 >= 0.5, "{preset}: r2 {r2}");
        assert!(mae <= 20.0, "{preset}: mae {mae}");
    }
}

#[test]
fn estimates_cover_held_out_timestamps() {
    let stream = aligned("nominal", 1);
    let run = wristband_core::run_online(&stream, &OnlineConfig::default()).unwrap();
    assert_eq!(run.cutoff, stream.len() / 4);
    assert_eq!(run.estimates.len(), stream.len() - run.cutoff);
    for (e, s) in run.estimates.iter().zip(&stream[run.cutoff..]) {
        assert_eq!(e.t, s.t);
    }
    assert_eq!(run.state.samples_seen(), run.cutoff as u64);
    assert_eq!(run.update_chunks(), (run.cutoff - run.initial_block) as u64);
    let (lo, hi) = run.pso_bounds;
    assert!((lo..=hi).contains(&run.n_hidden()));
}

#[test]
fn full_training_fraction_leaves_nothing_to_estimate() {
    let stream = aligned("clean", 2);
    let run = wristband_core::run_online(
        &stream,
        &OnlineConfig { training_fraction: 1.0, ..Default::default() },
    )
    .unwrap();
    assert!(run.estimates.is_empty());
    assert_eq!(run.state.samples_seen(), stream.len() as u64);
}

#[test]
fn one_chunk_matches_per_sample_updates() {
    let stream = aligned("nominal", 4);
    let base = OnlineConfig { seed: 4, ..Default::default() };
    let per_sample = wristband_core::run_online(&stream, &base).unwrap();
    let remaining = per_sample.cutoff - per_sample.initial_block;
    let single = wristband_core::run_online(&stream, &OnlineConfig { chunk_size: remaining, ..base }).unwrap();
    assert_eq!(single.update_chunks(), 1);
    assert_eq!(single.n_hidden(), per_sample.n_hidden());
    for (a, b) in single.estimates.iter().zip(&per_sample.estimates) {
        for k in 0..3 {
            let scale = b.theta[k].abs().max(1.0);
            assert!((a.theta[k] - b.theta[k]).abs() <= 1e-6 * scale, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn same_seed_same_run() {
    let stream = aligned("misaligned", 9);
    let cfg = OnlineConfig { seed: 9, ..Default::default() };
    let a = wristband_core::run_online(&stream, &cfg).unwrap();
    let b = wristband_core::run_online(&stream, &cfg).unwrap();
    assert_eq!(a.estimates, b.estimates);
    assert_eq!(a.state, b.state);
}

#[test]
fn short_calibration_is_reported() {
    let stream = aligned("clean", 0);
    // One second of calibration is five aligned samples; five nodes need more.
    let err = wristband_core::run_online(
        &stream,
        &OnlineConfig { calibration_span_s: 1.0, ..Default::default() },
    )
    .unwrap_err();
    assert!(
        matches!(err, Error::InsufficientData { what: "calibration window", .. }),
        "{err}"
    );
}

#[test]
fn tiny_stream_is_rejected() {
    let stream = aligned("clean", 0);
    let err = wristband_core::run_online(&stream[..30], &OnlineConfig::default()).unwrap_err();
    assert!(matches!(err, Error::InsufficientData { .. }), "{err}");
    assert!(wristband_core::run_online(&[], &OnlineConfig::default()).is_err());
}
