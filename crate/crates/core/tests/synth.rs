use osos_elm::synth::{
    gen_dcs, gen_flim, gen_fog_hist, generate, generate_range, lifetime_labels, split, CountNoise, DatasetSpec, DcsNoise,
    DcsSpec, FlimDecaySpec, FogHistSpec, TaskKind,
};
use osos_elm::Error;
use proptest::prelude::*;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Slope of the least-squares line through `(t, ln y)`.
fn log_linear_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mt = t.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(&ly).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    sxy / sxx
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1.0f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    (d, p.clamp(0.0, 1.0))
}

#[test]
fn weighted_lifetimes_by_hand() {
    let (ta, ti) = lifetime_labels([0.5, 0.5], [1.0, 3.0]);
    assert!((ta - 2.0).abs() < 1e-15);
    assert!((ti - 2.5).abs() < 1e-15);
}

#[test]
fn delta_irf_single_exponential_is_geometric() {
    let spec = FlimDecaySpec {
        irf_fwhm: 0.0,
        irf_offset_bin: 0,
        noise: CountNoise::None,
        ..Default::default()
    };
    let h = spec.clean_histogram([1.0, 0.0], [1.0, 2.0]);
    let want = (-0.039f64).exp();
    for w in h.windows(2).take(200) {
        assert!((w[1] / w[0] - want).abs() < 1e-12);
    }
}

#[test]
fn log_linear_fit_recovers_drawn_lifetimes() {
    let spec = FlimDecaySpec {
        alpha1_range: (1.0, 1.0),
        noise: CountNoise::None,
        ..Default::default()
    };
    let ds = gen_flim(&spec, 1000, 3).unwrap();
    let start = spec.irf_offset_bin + 15;
    let mut errs = Vec::new();
    for i in 0..ds.len() {
        let tau = ds.y[(i, 0)];
        let row = ds.x.row(i);
        let idx: Vec<usize> = (start..spec.n_bins).filter(|&t| row[t] > 1e-200).collect();
        let t: Vec<f64> = idx.iter().map(|&k| k as f64 * spec.bin_width).collect();
        let y: Vec<f64> = idx.iter().map(|&k| row[k]).collect();
        let fit = -1.0 / log_linear_slope(&t, &y);
        errs.push((fit - tau).abs() / tau);
    }
    let med = median(errs);
    assert!(med < 0.01, "median relative error {med}");
}

#[test]
fn flim_rows_are_max_normalised() {
    let ds = gen_flim(&FlimDecaySpec::default(), 50, 9).unwrap();
    for i in 0..ds.len() {
        let m = ds.x.row(i).iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(m, 1.0);
        assert!(ds.x.row(i).iter().all(|&v| v >= 0.0));
    }
}

fn quiet_dcs() -> DcsSpec {
    DcsSpec {
        noise: DcsNoise::None,
        ..Default::default()
    }
}

#[test]
fn dcs_lag_limits_on_default_ranges() {
    let spec = quiet_dcs();
    for bfi in [1e-7, 2.5e-7, 4e-7] {
        for beta in [0.3, 0.5] {
            let g2 = spec.g2_curve(bfi, beta);
            assert!((g2[0] - (1.0 + beta)).abs() <= 1e-3);
            assert!((g2[g2.len() - 1] - 1.0).abs() <= 1e-3);
        }
    }
}

#[test]
fn g1_never_increases_for_drawn_flows() {
    let spec = quiet_dcs();
    let ds = gen_dcs(&spec, 200, 4).unwrap();
    for i in 0..ds.len() {
        let bfi = ds.y[(i, 0)] * spec.bfi_label_unit;
        let g1 = spec.g1_curve(bfi);
        assert!(g1.windows(2).all(|w| w[1] <= w[0]), "sample {i}");
    }
}

#[test]
fn beta_is_the_short_lag_intercept() {
    let spec = quiet_dcs();
    let ds = gen_dcs(&spec, 200, 5).unwrap();
    for i in 0..ds.len() {
        // Inputs are g2 - 1 by default.
        assert!((ds.x[(i, 0)] - ds.y[(i, 1)]).abs() <= 1e-3);
    }
    let raw = DcsSpec {
        subtract_baseline: false,
        ..quiet_dcs()
    };
    let ds = gen_dcs(&raw, 50, 5).unwrap();
    for i in 0..ds.len() {
        assert!((ds.x[(i, 0)] - 1.0 - ds.y[(i, 1)]).abs() <= 1e-3);
    }
}

#[test]
fn faster_flow_decorrelates_sooner() {
    let spec = quiet_dcs();
    let lags = spec.lags();
    let half_lag = |bfi: f64| {
        let g1 = spec.g1_curve(bfi);
        let k = g1.iter().position(|&g| g <= 0.5).unwrap();
        // Log-lag interpolation between the bracketing grid points.
        let (l0, l1) = (lags[k - 1].ln(), lags[k].ln());
        let f = (g1[k - 1] - 0.5) / (g1[k - 1] - g1[k]);
        (l0 + f * (l1 - l0)).exp()
    };
    let flows: Vec<f64> = (0..12).map(|i| 1e-7 * 1.25f64.powi(i)).collect();
    let halves: Vec<f64> = flows.iter().map(|&b| half_lag(b)).collect();
    assert!(halves.windows(2).all(|w| w[1] < w[0]), "{halves:?}");
}

#[test]
fn fog_free_peaks_sit_in_their_class() {
    let spec = FogHistSpec {
        signal_to_fog_ratio: f64::INFINITY,
        ratio_spread: 1.0,
        noise: CountNoise::None,
        ..Default::default()
    };
    let ds = gen_fog_hist(&spec, 400, 6).unwrap();
    let classes = ds.y.argmax_rows();
    let peaks = ds.x.argmax_rows();
    for (c, p) in classes.into_iter().zip(peaks) {
        let (lo, hi) = spec.peak_position_range(c);
        // The argmax bin is the rounded peak position.
        assert!(p as f64 >= lo.floor() && p as f64 <= hi.ceil(), "class {c} peak {p}");
    }
}

#[test]
fn fog_only_histograms_are_class_blind() {
    let spec = FogHistSpec {
        signal_to_fog_ratio: 0.0,
        ratio_spread: 1.0,
        ..Default::default()
    };
    let ds = gen_fog_hist(&spec, 4000, 7).unwrap();
    let classes = ds.y.argmax_rows();
    let (lo, hi) = spec.peak_position_range(spec.n_classes - 1);
    let region = |i: usize| (lo as usize..hi.ceil() as usize).map(|t| ds.x[(i, t)]).sum::<f64>();
    let pick = |c: usize| -> Vec<f64> { (0..ds.len()).filter(|&i| classes[i] == c).map(region).collect() };
    let (_, p) = ks_two_sample(&pick(0), &pick(spec.n_classes - 1));
    assert!(p > 0.01, "p = {p}");

    let with_signal = gen_fog_hist(&FogHistSpec::default(), 4000, 7).unwrap();
    let classes = with_signal.y.argmax_rows();
    let region = |i: usize| (lo as usize..hi.ceil() as usize).map(|t| with_signal.x[(i, t)]).sum::<f64>();
    let a: Vec<f64> = (0..4000).filter(|&i| classes[i] == 0).map(region).collect();
    let b: Vec<f64> = (0..4000).filter(|&i| classes[i] == spec.n_classes - 1).map(region).collect();
    let (_, p) = ks_two_sample(&a, &b);
    assert!(p < 0.01);
}

#[test]
fn nearest_centroid_learns_default_fog() {
    let spec = DatasetSpec::default_for(TaskKind::Fog);
    let ds = generate(&spec, 8000, 11).unwrap();
    let (k, d) = (ds.y.cols(), ds.x.cols());
    let labels = ds.y.argmax_rows();
    let mut cent = vec![vec![0.0; d]; k];
    let mut count = vec![0usize; k];
    for i in 0..6000 {
        count[labels[i]] += 1;
        for j in 0..d {
            cent[labels[i]][j] += ds.x[(i, j)];
        }
    }
    for c in 0..k {
        cent[c].iter_mut().for_each(|v| *v /= count[c] as f64);
    }
    let dist = |i: usize, c: usize| -> f64 { (0..d).map(|j| (ds.x[(i, j)] - cent[c][j]).powi(2)).sum() };
    let hits = (6000..8000)
        .filter(|&i| (0..k).min_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b))).unwrap() == labels[i])
        .count();
    let acc = hits as f64 / 2000.0;
    assert!(acc > 0.8, "accuracy {acc}");
}

#[test]
fn split_sizes() {
    let ds = generate(&DatasetSpec::default_for(TaskKind::Fog), 8000, 1).unwrap();
    let (init, stream) = split(&ds, 250).unwrap();
    assert_eq!((init.len(), stream.len()), (250, 7750));
    assert!(split(&ds, 8000).unwrap().1.is_empty());
    assert!(matches!(split(&ds, 8001), Err(Error::Range { .. })));
}

#[test]
fn datasets_are_reproducible() {
    for kind in [TaskKind::Flim, TaskKind::Dcs, TaskKind::Fog] {
        let spec = DatasetSpec::default_for(kind);
        let a = generate(&spec, 40, 123).unwrap();
        let b = generate(&spec, 40, 123).unwrap();
        assert_eq!(a, b);
        let tail = generate_range(&spec, 25, 15, 123).unwrap();
        assert_eq!(tail.x, a.x.slice_rows(25, 40));
        assert_ne!(generate(&spec, 40, 124).unwrap().x, a.x);
    }
}

proptest! {
    #[test]
    fn amplitude_weighted_is_below_intensity_weighted(
        a1 in 0.01f64..0.99,
        t1 in 0.1f64..5.0,
        t2 in 1.0f64..3.0,
    ) {
        prop_assume!((t1 - t2).abs() > 1e-6);
        let (ta, ti) = lifetime_labels([a1, 1.0 - a1], [t1, t2]);
        prop_assert!(ta < ti);
    }

    #[test]
    fn noiseless_photon_total_is_linear_in_amplitude(p in 1.0f64..1e4, k in 1.0f64..10.0) {
        let base = FlimDecaySpec { amplitude: p, noise: CountNoise::None, ..Default::default() };
        let scaled = FlimDecaySpec { amplitude: p * k, ..base.clone() };
        let s0: f64 = base.clean_histogram([0.4, 0.6], [0.7, 2.2]).iter().sum();
        let s1: f64 = scaled.clean_histogram([0.4, 0.6], [0.7, 2.2]).iter().sum();
        prop_assert!((s1 / s0 - k).abs() < 1e-9 * k);
    }

    #[test]
    fn fog_histograms_are_non_negative(seed in 0u64..1000) {
        let ds = gen_fog_hist(&FogHistSpec::default(), 5, seed).unwrap();
        prop_assert!(ds.x.as_slice().iter().all(|&v| v >= 0.0));
    }
}
