//! Fluorescence decay histograms.
//!
//! A bi-exponential decay `P Σ αₖ exp(−tΔ/τₖ)` on `T` bins of width `Δ` is
//! convolved (causally, truncated to `T` bins) with a discrete Gaussian
//! instrument response, optionally passed through Poisson counting with dark
//! counts, and max-normalised. Labels are the amplitude-weighted lifetime
//! `τ_A = Σαₖτₖ / Σαₖ` and the intensity-weighted lifetime
//! `τ_I = Σαₖτₖ² / Σαₖτₖ`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng::Rng as SampleRng;
use crate::synth::params::{fmt_range, parse_f64, parse_range, parse_usize, Params};

/// FWHM of a Gaussian in units of its standard deviation.
pub const FWHM_PER_SIGMA: f64 = 2.355;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountNoise {
    None,
    Poisson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlimDecaySpec {
    pub n_bins: usize,
    /// ns
    pub bin_width: f64,
    /// ns
    pub tau1_range: (f64, f64),
    /// ns
    pub tau2_range: (f64, f64),
    /// Fraction of the first component; the second gets `1 − α₁`.
    pub alpha1_range: (f64, f64),
    /// Decay amplitude `P` in photon counts.
    pub amplitude: f64,
    /// ns; zero gives a delta response.
    pub irf_fwhm: f64,
    pub irf_offset_bin: usize,
    pub noise: CountNoise,
    /// Mean dark counts added to every bin.
    pub dark_count_rate: f64,
}

impl Default for FlimDecaySpec {
    fn default() -> Self {
        FlimDecaySpec {
            n_bins: 256,
            bin_width: 0.039,
            tau1_range: (0.1, 5.0),
            tau2_range: (1.0, 3.0),
            alpha1_range: (0.0, 1.0),
            amplitude: 1000.0,
            irf_fwhm: 0.1673,
            irf_offset_bin: 10,
            noise: CountNoise::Poisson,
            dark_count_rate: 0.0,
        }
    }
}

/// `(τ_A, τ_I)` of a bi-exponential mixture.
pub fn lifetime_labels(alpha: [f64; 2], tau: [f64; 2]) -> (f64, f64) {
    let s0 = alpha[0] + alpha[1];
    let s1 = alpha[0] * tau[0] + alpha[1] * tau[1];
    let s2 = alpha[0] * tau[0] * tau[0] + alpha[1] * tau[1] * tau[1];
    (s1 / s0, s2 / s1)
}

impl FlimDecaySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(format!("flim: {m}")));
        if self.n_bins == 0 {
            return bad("n_bins must be >= 1");
        }
        if !(self.bin_width > 0.0) {
            return bad("bin_width must be positive");
        }
        for (name, (lo, hi)) in [("tau1_range", self.tau1_range), ("tau2_range", self.tau2_range)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad(&format!("{name} must be a non-empty positive interval"));
            }
        }
        let (a0, a1) = self.alpha1_range;
        if !(0.0 <= a0 && a0 <= a1 && a1 <= 1.0) {
            return bad("alpha1_range must lie within [0, 1]");
        }
        if !(self.amplitude >= 0.0) || !(self.irf_fwhm >= 0.0) || !(self.dark_count_rate >= 0.0) {
            return bad("amplitude, irf_fwhm and dark_count_rate must be non-negative");
        }
        Ok(())
    }

    /// Unit-sum instrument response on the histogram grid.
    pub fn irf(&self) -> Vec<f64> {
        let mut irf = vec![0.0; self.n_bins];
        let centre = self.irf_offset_bin.min(self.n_bins - 1);
        let sigma_bins = self.irf_fwhm / FWHM_PER_SIGMA / self.bin_width;
        if sigma_bins == 0.0 {
            irf[centre] = 1.0;
            return irf;
        }
        for (s, v) in irf.iter_mut().enumerate() {
            let d = (s as f64 - centre as f64) / sigma_bins;
            *v = (-0.5 * d * d).exp();
        }
        let total: f64 = irf.iter().sum();
        irf.iter_mut().for_each(|v| *v /= total);
        irf
    }

    /// Expected counts per bin before noise.
    pub fn clean_histogram(&self, alpha: [f64; 2], tau: [f64; 2]) -> Vec<f64> {
        let t_bins = self.n_bins;
        let decay: Vec<f64> = (0..t_bins)
            .map(|t| {
                let t = t as f64 * self.bin_width;
                self.amplitude * (alpha[0] * (-t / tau[0]).exp() + alpha[1] * (-t / tau[1]).exp())
            })
            .collect();
        let irf = self.irf();
        let mut out = vec![0.0; t_bins];
        for (t, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for s in 0..=t {
                acc += irf[s] * decay[t - s];
            }
            *o = acc;
        }
        out
    }

    pub(crate) fn sample(&self, rng: &mut SampleRng) -> (Vec<f64>, Vec<f64>) {
        let tau1 = draw(rng, self.tau1_range);
        let tau2 = draw(rng, self.tau2_range);
        let a1 = draw(rng, self.alpha1_range);
        let alpha = [a1, 1.0 - a1];
        let tau = [tau1, tau2];
        let mut hist = self.clean_histogram(alpha, tau);
        if self.noise == CountNoise::Poisson {
            for v in hist.iter_mut() {
                *v = poisson(rng, *v + self.dark_count_rate);
            }
        }
        normalize_max(&mut hist);
        let (tau_a, tau_i) = lifetime_labels(alpha, tau);
        (hist, vec![tau_a, tau_i])
    }

    pub(crate) fn params(&self) -> Params {
        vec![
            ("n_bins".into(), self.n_bins.to_string()),
            ("bin_width".into(), format!("{:?}", self.bin_width)),
            ("tau1_range".into(), fmt_range(self.tau1_range)),
            ("tau2_range".into(), fmt_range(self.tau2_range)),
            ("alpha1_range".into(), fmt_range(self.alpha1_range)),
            ("amplitude".into(), format!("{:?}", self.amplitude)),
            ("irf_fwhm".into(), format!("{:?}", self.irf_fwhm)),
            ("irf_offset_bin".into(), self.irf_offset_bin.to_string()),
            (
                "noise".into(),
                match self.noise {
                    CountNoise::None => "none".into(),
                    CountNoise::Poisson => "poisson".into(),
                },
            ),
            ("dark_count_rate".into(), format!("{:?}", self.dark_count_rate)),
        ]
    }

    /// Sets one field from its textual `key=value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n_bins" => self.n_bins = parse_usize(key, value)?,
            "bin_width" => self.bin_width = parse_f64(key, value)?,
            "tau1_range" => self.tau1_range = parse_range(key, value)?,
            "tau2_range" => self.tau2_range = parse_range(key, value)?,
            "alpha1_range" => self.alpha1_range = parse_range(key, value)?,
            "amplitude" => self.amplitude = parse_f64(key, value)?,
            "irf_fwhm" => self.irf_fwhm = parse_f64(key, value)?,
            "irf_offset_bin" => self.irf_offset_bin = parse_usize(key, value)?,
            "noise" => {
                self.noise = match value {
                    "none" => CountNoise::None,
                    "poisson" => CountNoise::Poisson,
                    v => return Err(Error::InvalidSpec(format!("flim noise `{v}`"))),
                }
            }
            "dark_count_rate" => self.dark_count_rate = parse_f64(key, value)?,
            _ => return Err(Error::InvalidSpec(format!("unknown flim parameter `{key}`"))),
        }
        Ok(())
    }
}

pub(crate) fn draw(rng: &mut SampleRng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

pub(crate) fn poisson(rng: &mut SampleRng, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(mean)
}

pub(crate) fn normalize_max(v: &mut [f64]) {
    let max = v.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        v.iter_mut().for_each(|x| *x /= max);
    }
}
