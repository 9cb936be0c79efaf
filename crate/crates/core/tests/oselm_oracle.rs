//! Recursive OSELM solution against an independent ridge least-squares solve.

mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use wristband_core::elm::batch_fit;
use wristband_core::oselm::DEFAULT_RIDGE;
use wristband_core::{Activation, Error, HiddenParams, OselmState};

fn rows(m: &DMatrix<f64>, start: usize, len: usize) -> DMatrix<f64> {
    m.rows(start, len).into_owned()
}

/// Runs init on `n0` rows then the given chunk lengths; checks the Woodbury
/// identity after every step. Returns the final state.
fn run_partition(
    hidden: &HiddenParams,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    n0: usize,
    chunks: &[usize],
    check_identity: bool,
) -> OselmState {
    let mut state = OselmState::init(hidden.clone(), &rows(x, 0, n0), &rows(y, 0, n0), DEFAULT_RIDGE).unwrap();
    let mut seen = n0;
    for &c in chunks {
        state.update(&rows(x, seen, c), &rows(y, seen, c)).unwrap();
        seen += c;
        if check_identity {
            let h = hidden.hidden_matrix(&rows(x, 0, seen)).unwrap();
            let k = regularized_gram(&h, DEFAULT_RIDGE);
            let dev = max_abs_identity_deviation(&(state.m_inv() * k));
            assert!(dev < 1e-6, "M·K deviates by {dev:e} after {seen} samples");
        }
    }
    assert_eq!(seen, x.nrows());
    state
}

#[test]
fn init_matches_batch_pseudo_inverse() {
    let mut r = rng(1);
    let hidden = HiddenParams::random(8, 4, Activation::Sigmoid, 3).unwrap();
    let (x, y) = random_stream(&mut r, 120, 4, 3);
    let state = OselmState::init(hidden.clone(), &x, &y, DEFAULT_RIDGE).unwrap();
    let h = hidden.hidden_matrix(&x).unwrap();
    let rel = rel_frobenius(state.beta(), &ridge_oracle(&h, &y, DEFAULT_RIDGE));
    assert!(rel < 1e-6, "{rel:e}");
    let dev = max_abs_identity_deviation(&(state.m_inv() * regularized_gram(&h, DEFAULT_RIDGE)));
    assert!(dev < 1e-6, "{dev:e}");
    assert_eq!(state.chunks_seen(), 1);
    assert_eq!(state.samples_seen(), 120);
}

#[test]
fn init_matches_unregularized_fit_when_well_conditioned() {
    // Weights spread wide enough that the hidden columns are far from
    // collinear; the ridge term is then negligible.
    let w = DMatrix::from_fn(3, 2, |i, j| [[2.0, -1.0], [-1.5, 2.5], [0.5, 3.0]][i][j]);
    let b = nalgebra::DVector::from_vec(vec![0.3, -0.2, -1.0]);
    let hidden = HiddenParams::new(w, b, Activation::Tanh).unwrap();
    let mut r = rng(11);
    let x = DMatrix::from_fn(200, 2, |_, _| r.random_range(-1.0..1.0));
    let y = DMatrix::from_fn(200, 1, |_, _| r.random_range(-1.0..1.0));
    let state = OselmState::init(hidden.clone(), &x, &y, DEFAULT_RIDGE).unwrap();
    let batch = batch_fit(&hidden.hidden_matrix(&x).unwrap(), &y).unwrap();
    let rel = rel_frobenius(state.beta(), batch.beta());
    assert!(rel < 1e-6, "{rel:e}");
}

#[test]
fn short_initial_block_is_ill_conditioned() {
    let mut r = rng(2);
    let hidden = HiddenParams::random(20, 4, Activation::Sigmoid, 3).unwrap();
    let (x, y) = random_stream(&mut r, 12, 4, 3);
    let err = OselmState::init(hidden, &x, &y, DEFAULT_RIDGE).unwrap_err();
    assert!(matches!(err, Error::IllConditioned { .. }), "{err}");
    assert!(err.to_string().contains("larger initial block"));
}

#[test]
fn singular_gram_without_ridge_is_ill_conditioned() {
    // Every row identical: HᵀH has rank one.
    let hidden = HiddenParams::random(6, 4, Activation::Sigmoid, 3).unwrap();
    let x = DMatrix::from_fn(30, 4, |_, j| j as f64 * 0.5);
    let y = DMatrix::from_element(30, 1, 3.0);
    let err = OselmState::init(hidden, &x, &y, 0.0).unwrap_err();
    assert!(matches!(err, Error::IllConditioned { .. }), "{err}");
}

#[test]
fn updates_reject_bad_chunks() {
    let mut r = rng(3);
    let hidden = HiddenParams::random(5, 4, Activation::Sigmoid, 3).unwrap();
    let (x, y) = random_stream(&mut r, 20, 4, 3);
    let mut state = OselmState::init(hidden, &x, &y, DEFAULT_RIDGE).unwrap();
    let before = state.clone();

    let mut bad = rows(&x, 0, 2);
    bad[(1, 2)] = f64::INFINITY;
    assert!(matches!(state.update(&bad, &rows(&y, 0, 2)), Err(Error::NonFinite(_))));
    assert!(matches!(
        state.update(&rows(&x, 0, 2), &DMatrix::zeros(2, 1)),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        state.update(&DMatrix::zeros(2, 3), &rows(&y, 0, 2)),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(state.update(&DMatrix::zeros(0, 4), &DMatrix::zeros(0, 3)).is_err());
    assert_eq!(state, before);
}

#[test]
fn sequence_of_updates_matches_batch_on_concatenation() {
    let mut r = rng(4);
    let hidden = HiddenParams::random(12, 4, Activation::Sigmoid, 5).unwrap();
    let (x, y) = random_stream(&mut r, 300, 4, 3);
    let chunks = random_partition(&mut r, 300 - 30, 25);
    let state = run_partition(&hidden, &x, &y, 30, &chunks, true);
    let oracle = ridge_oracle(&hidden.hidden_matrix(&x).unwrap(), &y, DEFAULT_RIDGE);
    let rel = rel_frobenius(state.beta(), &oracle);
    assert!(rel < 1e-6, "{rel:e}");
    assert_eq!(state.chunks_seen(), 1 + chunks.len() as u64);
}

#[test]
fn rank_one_updates_equal_one_pair_chunk() {
    let mut r = rng(5);
    let hidden = HiddenParams::random(7, 4, Activation::Tanh, 6).unwrap();
    let (x, y) = random_stream(&mut r, 22, 4, 3);
    let singles = run_partition(&hidden, &x, &y, 20, &[1, 1], false);
    let pair = run_partition(&hidden, &x, &y, 20, &[2], false);
    assert!(rel_frobenius(singles.beta(), pair.beta()) < 1e-9);
}

#[test]
fn repeated_sample_matches_duplicated_batch() {
    let mut r = rng(6);
    let hidden = HiddenParams::random(6, 4, Activation::Sigmoid, 7).unwrap();
    let (x, y) = random_stream(&mut r, 40, 4, 3);
    let mut state = OselmState::init(hidden.clone(), &x, &y, DEFAULT_RIDGE).unwrap();
    let dup_x = rows(&x, 17, 1);
    let dup_y = rows(&y, 17, 1);
    state.update(&dup_x, &dup_y).unwrap();

    let all_x = DMatrix::from_fn(41, 4, |i, j| if i < 40 { x[(i, j)] } else { dup_x[(0, j)] });
    let all_y = DMatrix::from_fn(41, 3, |i, j| if i < 40 { y[(i, j)] } else { dup_y[(0, j)] });
    let oracle = ridge_oracle(&hidden.hidden_matrix(&all_x).unwrap(), &all_y, DEFAULT_RIDGE);
    assert!(rel_frobenius(state.beta(), &oracle) < 1e-6);
}

#[test]
fn resumable_state_roundtrip() {
    let mut r = rng(7);
    let hidden = HiddenParams::random(9, 4, Activation::Sigmoid, 8).unwrap();
    let (x, y) = random_stream(&mut r, 60, 4, 3);
    let mut state = OselmState::init(hidden, &rows(&x, 0, 30), &rows(&y, 0, 30), DEFAULT_RIDGE).unwrap();
    state.update_chunked(&rows(&x, 30, 10), &rows(&y, 30, 10), 3).unwrap();
    let mut resumed = OselmState::load(&state.save()).unwrap();
    assert_eq!(resumed, state);
    state.update_chunked(&rows(&x, 40, 20), &rows(&y, 40, 20), 4).unwrap();
    resumed.update_chunked(&rows(&x, 40, 20), &rows(&y, 40, 20), 4).unwrap();
    assert_eq!(resumed, state);
    // The saved state also loads as a plain model.
    let model = wristband_core::load_model(&state.save()).unwrap();
    assert_eq!(model, state.model());
}

#[test]
fn m_inv_stays_symmetric() {
    let mut r = rng(8);
    let hidden = HiddenParams::random(15, 4, Activation::Sigmoid, 9).unwrap();
    let (x, y) = random_stream(&mut r, 400, 4, 3);
    let state = run_partition(&hidden, &x, &y, 30, &vec![1; 370], false);
    let m = state.m_inv();
    assert!((m - m.transpose()).amax() <= 1e-8 * m.amax());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn any_chunking_matches_ridge_oracle(
        seed in any::<u64>(),
        n in 5usize..=20,
        total in 100usize..=300,
        max_chunk in 1usize..60,
    ) {
        let mut r = rng(seed);
        let hidden = HiddenParams::random(n, 4, Activation::Sigmoid, r.random()).unwrap();
        let (x, y) = random_stream(&mut r, total, 4, 3);
        let n0 = (2 * n).max(n + 5);
        let chunks = random_partition(&mut r, total - n0, max_chunk);
        let state = run_partition(&hidden, &x, &y, n0, &chunks, false);
        let oracle = ridge_oracle(&hidden.hidden_matrix(&x).unwrap(), &y, DEFAULT_RIDGE);
        let rel = rel_frobenius(state.beta(), &oracle);
        prop_assert!(rel < 1e-6, "relative error {:e}", rel);

        let k = regularized_gram(&hidden.hidden_matrix(&x).unwrap(), DEFAULT_RIDGE);
        prop_assert!(max_abs_identity_deviation(&(state.m_inv() * k)) < 1e-6);
    }

    #[test]
    fn two_partitions_agree(seed in any::<u64>(), n in 5usize..=20) {
        let mut r = rng(seed);
        let hidden = HiddenParams::random(n, 4, Activation::Sigmoid, r.random()).unwrap();
        let (x, y) = random_stream(&mut r, 200, 4, 3);
        let n0 = (2 * n).max(n + 5);
        let a = random_partition(&mut r, 200 - n0, 40);
        let b = random_partition(&mut r, 200 - n0, 40);
        let sa = run_partition(&hidden, &x, &y, n0, &a, false);
        let sb = run_partition(&hidden, &x, &y, n0, &b, false);
        prop_assert!(rel_frobenius(sa.beta(), sb.beta()) < 1e-6);
    }
}
