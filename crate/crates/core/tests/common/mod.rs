#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ridge least squares `min ‖Hβ − θ‖² + λ‖β‖²`, solved as ordinary least
/// squares on the stacked system `[H; √λ I] β = [θ; 0]` with a QR
/// factorization. Shares no code path with the recursive solver.
pub fn ridge_oracle(h: &DMatrix<f64>, t: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let (rows, n) = h.shape();
    let mut a = DMatrix::zeros(rows + n, n);
    a.rows_mut(0, rows).copy_from(h);
    for i in 0..n {
        a[(rows + i, i)] = lambda.sqrt();
    }
    let mut b = DMatrix::zeros(rows + n, t.ncols());
    b.rows_mut(0, rows).copy_from(t);
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    qr.r().solve_upper_triangular(&qtb).expect("stacked system has full rank")
}

/// Accumulated `Σ HᵀH + λI`, formed directly.
pub fn regularized_gram(h: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let mut k = h.transpose() * h;
    for i in 0..k.nrows() {
        k[(i, i)] += lambda;
    }
    k
}

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn max_abs_identity_deviation(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    (m - DMatrix::<f64>::identity(n, n)).amax()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Voltage-like inputs in [0, 3.3) and angle-like targets in [-60, 60).
pub fn random_stream(rng: &mut ChaCha8Rng, rows: usize, m: usize, d: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let x = DMatrix::from_fn(rows, m, |_, _| rng.random_range(0.0..3.3));
    let y = DMatrix::from_fn(rows, d, |_, _| rng.random_range(-60.0..60.0));
    (x, y)
}

/// Random split of `total` into consecutive chunk lengths, each >= 1.
pub fn random_partition(rng: &mut ChaCha8Rng, total: usize, max_chunk: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut left = total;
    while left > 0 {
        let c = rng.random_range(1..=max_chunk.min(left));
        out.push(c);
        left -= c;
    }
    out
}
