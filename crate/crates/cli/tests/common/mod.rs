#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

pub fn wristband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wristband"))
        .args(args)
        .output()
        .expect("spawn wristband")
}

pub fn ok(args: &[&str]) -> String {
    let out = wristband(args);
    assert!(
        out.status.success(),
        "wristband {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and stderr of a run that must fail.
pub fn fails(args: &[&str]) -> (i32, String) {
    let out = wristband(args);
    assert!(!out.status.success(), "wristband {args:?} unexpectedly succeeded");
    (out.status.code().unwrap(), String::from_utf8(out.stderr).unwrap())
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn key_values(path: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn data_lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.trim().is_empty()).count()
}

/// `simulate` then `train` then `estimate` on the full strain file, then
/// `evaluate` of the held-out estimates, all under `dir`.
pub fn full_pipeline(dir: &Path, preset: &str, seed: u64) {
    let sim = dir.join("sim");
    let model = dir.join("model");
    let seed = seed.to_string();
    ok(&["simulate", "--preset", preset, "--seed", &seed, "--out", p(&sim)]);
    ok(&[
        "train", "--strain", p(&sim.join("strain.csv")), "--imu", p(&sim.join("imu.csv")),
        "--seed", &seed, "--out", p(&model),
    ]);
    ok(&[
        "estimate", "--strain", p(&sim.join("strain.csv")), "--model", p(&model.join("model.bin")),
        "--out", p(&dir.join("all_estimates.csv")),
    ]);
    ok(&[
        "evaluate", "--estimates", p(&model.join("estimates.csv")), "--imu", p(&sim.join("imu.csv")),
        "--scenario", preset, "--out", p(&dir.join("report")),
    ]);
}
