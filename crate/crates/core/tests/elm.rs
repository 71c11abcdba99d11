mod common;

use common::{gauss_inverse, naive_mul, random_matrix, rel_err, to_na};
use osos_elm::elm::{batch_update, initial_train, obt_update, output_weights, output_weights_normal};
use osos_elm::{Batch, ElmModel, Error, Matrix, OnlineState, PinvConfig, Topology};
use proptest::prelude::*;

fn dataset(n: usize, n_in: usize, n_out: usize, seed: u64) -> Batch {
    let x = random_matrix(n, n_in, seed);
    let y = random_matrix(n, n_out, seed + 1000);
    Batch::new(x, y).unwrap()
}

fn rows(b: &Batch, start: usize, end: usize) -> Batch {
    Batch::new(b.x.slice_rows(start, end), b.y.slice_rows(start, end)).unwrap()
}

/// Least-squares output weights of the whole set through an external SVD.
fn full_least_squares(model: &ElmModel, b: &Batch) -> Matrix {
    let h = to_na(&model.hidden_activations(&b.x).unwrap());
    let sol = h.svd(true, true).solve(&to_na(&b.y), 1e-14).unwrap();
    common::from_na(&sol)
}

fn stream_all(model: &ElmModel, b: &Batch, n_init: usize) -> OnlineState {
    let (mut state, _) = initial_train(model, &rows(b, 0, n_init), &PinvConfig::default()).unwrap();
    for i in n_init..b.len() {
        obt_update(&mut state, model, b.x.row(i), b.y.row(i)).unwrap();
    }
    state
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[test]
fn hidden_layer_matches_scalar_loop() {
    let model = ElmModel::init(Topology::new(4, 3, 1).unwrap(), 17);
    let x = random_matrix(2, 4, 3);
    let h = model.hidden_activations(&x).unwrap();
    let w = model.input_weights();
    let b = model.bias();
    for i in 0..2 {
        for j in 0..3 {
            let mut z = b[j];
            for d in 0..4 {
                z += x[(i, d)] * w[(d, j)];
            }
            assert!((h[(i, j)] - sigmoid(z)).abs() <= 1e-12);
        }
    }
}

#[test]
fn seed_42_weights_in_range() {
    let model = ElmModel::init(Topology::new(4, 3, 1).unwrap(), 42);
    assert!(model.input_weights().as_slice().iter().all(|w| w.abs() <= 1.0));
    assert!(model.bias().iter().all(|b| b.abs() <= 1.0));
    let other = ElmModel::init(Topology::new(4, 3, 1).unwrap(), 43);
    assert_ne!(model.input_weights(), other.input_weights());
}

#[test]
fn exactly_solvable_initial_batch() {
    let l = 6;
    let model = ElmModel::init(Topology::new(6, l, 2).unwrap(), 4);
    let x = random_matrix(l, 6, 9).scale(3.0);
    let h0 = model.hidden_activations(&x).unwrap();
    let eta_star = random_matrix(l, 2, 10);
    let y0 = naive_mul(&h0, &eta_star);
    let (state, diag) = initial_train(&model, &Batch::new(x.clone(), y0.clone()).unwrap(), &PinvConfig::default()).unwrap();
    assert!(!diag.rank_deficient());
    assert!(common::max_abs_diff(&state.eta, &eta_star) <= 1e-6);
    let yhat = model.infer(&x, &state.eta).unwrap();
    assert!(common::max_abs_diff(&yhat, &y0) <= 1e-5);
}

#[test]
fn one_short_initial_batch_fails() {
    let model = ElmModel::init(Topology::new(3, 8, 1).unwrap(), 1);
    let err = initial_train(&model, &dataset(7, 3, 1, 2), &PinvConfig::default()).unwrap_err();
    assert!(matches!(err, Error::InsufficientInitBatch { n_init: 7, hidden: 8 }));
}

#[test]
fn eta_routes_agree_on_random_instances() {
    for seed in 0..5 {
        let model = ElmModel::init(Topology::new(5, 8, 3).unwrap(), seed);
        let b = dataset(40, 5, 3, seed + 50);
        let h0 = model.hidden_activations(&b.x).unwrap();
        let (eta, _) = output_weights(&h0, &b.y, &PinvConfig::default()).unwrap();
        let p0 = gauss_inverse(&naive_mul(&h0.transpose(), &h0));
        let alt = output_weights_normal(&p0, &h0, &b.y).unwrap();
        assert!(rel_err(&eta, &alt) <= 1e-8, "seed {seed}");
    }
}

#[test]
fn streaming_reaches_full_least_squares() {
    let model = ElmModel::init(Topology::new(8, 10, 2).unwrap(), 3);
    let b = dataset(200, 8, 2, 77);
    let state = stream_all(&model, &b, 20);
    let oracle = full_least_squares(&model, &b);
    assert!(rel_err(&state.eta, &oracle) <= 1e-6, "{}", rel_err(&state.eta, &oracle));
    assert_eq!(state.samples_seen, 200);
}

#[test]
fn p_tracks_inverse_gram_of_prefix() {
    let model = ElmModel::init(Topology::new(4, 6, 1).unwrap(), 8);
    let b = dataset(60, 4, 1, 31);
    let (mut state, _) = initial_train(&model, &rows(&b, 0, 12), &PinvConfig::default()).unwrap();
    let h_all = model.hidden_activations(&b.x).unwrap();
    for i in 12..60 {
        obt_update(&mut state, &model, b.x.row(i), b.y.row(i)).unwrap();
        if i % 8 == 0 || i == 59 {
            let hp = h_all.slice_rows(0, i + 1);
            let oracle = gauss_inverse(&naive_mul(&hp.transpose(), &hp));
            assert!(rel_err(&state.p, &oracle) <= 1e-5, "prefix {i}");
        }
        let asym = state.p.sub(&state.p.transpose()).unwrap().max_abs();
        assert!(asym <= 1e-9);
    }
}

#[test]
fn denominator_stays_above_one() {
    let model = ElmModel::init(Topology::new(4, 6, 1).unwrap(), 2);
    let b = dataset(100, 4, 1, 5);
    let (mut state, _) = initial_train(&model, &rows(&b, 0, 10), &PinvConfig::default()).unwrap();
    for i in 10..100 {
        let h = model.hidden_row(b.x.row(i)).unwrap();
        let ph = state.p.matvec(&h).unwrap();
        let hph: f64 = h.iter().zip(&ph).map(|(a, c)| a * c).sum();
        assert!(1.0 + hph > 1.0);
        obt_update(&mut state, &model, b.x.row(i), b.y.row(i)).unwrap();
    }
}

#[test]
fn single_sample_batch_equals_rank_one_update() {
    let model = ElmModel::init(Topology::new(5, 7, 2).unwrap(), 6);
    let b = dataset(30, 5, 2, 40);
    let (state, _) = initial_train(&model, &rows(&b, 0, 20), &PinvConfig::default()).unwrap();
    for i in 20..30 {
        let mut a = state.clone();
        let mut c = state.clone();
        obt_update(&mut a, &model, b.x.row(i), b.y.row(i)).unwrap();
        batch_update(&mut c, &model, &rows(&b, i, i + 1), &PinvConfig::default()).unwrap();
        assert!(rel_err(&a.p, &c.p) <= 1e-10);
        assert!(rel_err(&a.eta, &c.eta) <= 1e-10);
        assert_eq!(a.samples_seen, c.samples_seen);
    }
}

#[test]
fn two_pairs_equal_four_singles() {
    let model = ElmModel::init(Topology::new(5, 7, 2).unwrap(), 6);
    let b = dataset(24, 5, 2, 41);
    let (state, _) = initial_train(&model, &rows(&b, 0, 20), &PinvConfig::default()).unwrap();
    let mut pairs = state.clone();
    batch_update(&mut pairs, &model, &rows(&b, 20, 22), &PinvConfig::default()).unwrap();
    batch_update(&mut pairs, &model, &rows(&b, 22, 24), &PinvConfig::default()).unwrap();
    let mut singles = state;
    for i in 20..24 {
        obt_update(&mut singles, &model, b.x.row(i), b.y.row(i)).unwrap();
    }
    assert!(rel_err(&pairs.p, &singles.p) <= 1e-8);
    assert!(rel_err(&pairs.eta, &singles.eta) <= 1e-8);
}

#[test]
fn batch_update_never_raises_full_residual() {
    let model = ElmModel::init(Topology::new(4, 6, 1).unwrap(), 12);
    let b = dataset(120, 4, 1, 13);
    let h_all = model.hidden_activations(&b.x).unwrap();
    let residual = |eta: &Matrix| h_all.matmul(eta).unwrap().sub(&b.y).unwrap().frobenius_norm();
    let (mut state, _) = initial_train(&model, &rows(&b, 0, 30), &PinvConfig::default()).unwrap();
    let r0 = residual(&state.eta);
    batch_update(&mut state, &model, &rows(&b, 30, 120), &PinvConfig::default()).unwrap();
    let r1 = residual(&state.eta);
    assert!(r1 <= r0, "{r1} > {r0}");
    let oracle = full_least_squares(&model, &b);
    assert!(rel_err(&state.eta, &oracle) <= 1e-6);
}

#[test]
fn sample_order_barely_matters() {
    let model = ElmModel::init(Topology::new(6, 9, 2).unwrap(), 21);
    let b = dataset(150, 6, 2, 22);
    let forward = stream_all(&model, &b, 30);
    let mut idx: Vec<usize> = (0..30).collect();
    idx.extend((30..150).rev());
    let shuffled = Batch::new(b.x.select_rows(&idx), b.y.select_rows(&idx)).unwrap();
    let backward = stream_all(&model, &shuffled, 30);
    assert!(rel_err(&forward.eta, &backward.eta) <= 1e-5);
}

#[test]
fn zero_eta_and_argmax_head() {
    let model = ElmModel::init(Topology::new(3, 12, 8).unwrap(), 2);
    let x = random_matrix(20, 3, 2);
    assert_eq!(model.infer(&x, &Matrix::zeros(12, 8)).unwrap(), Matrix::zeros(20, 8));

    let eta = random_matrix(12, 8, 4);
    let yhat = model.infer(&x, &eta).unwrap();
    let h = model.hidden_activations(&x).unwrap();
    for i in 0..20 {
        let scores: Vec<f64> = (0..8).map(|c| (0..12).map(|k| h[(i, k)] * eta[(k, c)]).sum()).collect();
        let mut best = 0;
        for c in 1..8 {
            if scores[c] > scores[best] {
                best = c;
            }
        }
        assert_eq!(yhat.argmax_rows()[i], best);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn online_equals_batch(seed in 0u64..1_000_000, n_in in 1usize..6, l in 2usize..8, n_out in 1usize..3) {
        let model = ElmModel::init(Topology::new(n_in, l, n_out).unwrap(), seed);
        let b = dataset(80, n_in, n_out, seed);
        let h = model.hidden_activations(&b.x).unwrap();
        let s = to_na(&h).singular_values();
        // Small random nets can have nearly collinear hidden units.
        prop_assume!(s[s.len() - 1] > 1e-4 * s[0]);
        let state = stream_all(&model, &b, 2 * l);
        let oracle = full_least_squares(&model, &b);
        prop_assert!(rel_err(&state.eta, &oracle) <= 1e-6);
    }

    #[test]
    fn hidden_outputs_lie_in_open_unit_interval(seed in 0u64..10_000, scale in 0.0f64..200.0) {
        let model = ElmModel::init(Topology::new(3, 5, 1).unwrap(), seed);
        let x = random_matrix(4, 3, seed).scale(scale);
        let h = model.hidden_activations(&x).unwrap();
        prop_assert!(h.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
    }
}
