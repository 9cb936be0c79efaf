//! Shared fixtures for the criterion benches.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Voltage-like inputs in [0, 3.3) and angle-like targets.
pub fn random_block(rows: usize, inputs: usize, outputs: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(rows, inputs, |_, _| rng.random_range(0.0..3.3));
    let y = DMatrix::from_fn(rows, outputs, |_, _| rng.random_range(-60.0..60.0));
    (x, y)
}

pub use wristband_core;
