//! Diffuse correlation spectroscopy autocorrelation curves.
//!
//! The field autocorrelation of a semi-infinite homogeneous medium under
//! continuous-wave illumination with an extrapolated boundary is
//!
//! ```text
//! G₁(τ) = 3μs′/(4π) · [exp(−K(τ) r₁)/r₁ − exp(−K(τ) r_b)/r_b]
//! K(τ)² = 3 μa μs′ + 6 μs′² k₀² αD_B τ,   k₀ = 2π n / λ
//! ```
//!
//! with `r₁`, `r_b` the distances from the detector to the real source at
//! depth `z₀ = 1/(μa + μs′)` and to its image at `−(z₀ + 2 z_b)`. The
//! intensity autocorrelation follows from the Siegert relation
//! `g₂ = 1 + β g₁²`, `g₁ = G₁(τ)/G₁(0)`.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::Rng as SampleRng;
use crate::synth::flim::draw;
use crate::synth::params::{fmt_range, parse_f64, parse_range, parse_usize, Params};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DcsNoise {
    None,
    /// Gaussian noise with the lag-dependent standard deviation of a
    /// multi-tau photon correlator (Koppel / Zhou model).
    LagScaledGaussian {
        /// Detected count rate, counts/s.
        intensity: f64,
        /// Total averaging time, s.
        averaging_time: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcsSpec {
    pub n_lags: usize,
    /// s
    pub lag_min: f64,
    /// s
    pub lag_max: f64,
    /// Reduced scattering coefficient, 1/mm.
    pub mu_s_prime: f64,
    /// Absorption coefficient, 1/mm.
    pub mu_a: f64,
    /// nm
    pub wavelength: f64,
    /// Source–detector separation, mm.
    pub sdd: f64,
    pub refractive_index: f64,
    /// Effective reflection coefficient of the boundary.
    pub r_eff: f64,
    /// Blood-flow index αD_B range, mm²/s.
    pub bfi_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub noise: DcsNoise,
    /// The BFi label is reported as `αD_B / bfi_label_unit`.
    pub bfi_label_unit: f64,
    /// Feed `g₂ − 1` instead of `g₂` as the network input. On by default:
    /// the constant offset of raw `g₂` pushes every hidden unit to nearly the
    /// same operating point and leaves `H₀ᵀH₀` numerically rank deficient.
    pub subtract_baseline: bool,
}

impl Default for DcsSpec {
    fn default() -> Self {
        DcsSpec {
            n_lags: 128,
            lag_min: 1e-7,
            lag_max: 0.1,
            mu_s_prime: 2.0,
            mu_a: 0.1,
            wavelength: 700.0,
            sdd: 10.0,
            refractive_index: 1.37,
            r_eff: 0.493,
            bfi_range: (1e-7, 4e-7),
            beta_range: (0.3, 0.5),
            noise: DcsNoise::LagScaledGaussian {
                intensity: 1e5,
                averaging_time: 1.0,
            },
            bfi_label_unit: 1e-6,
            subtract_baseline: true,
        }
    }
}

impl DcsSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(format!("dcs: {m}")));
        if self.n_lags < 2 {
            return bad("n_lags must be >= 2");
        }
        if !(self.lag_min > 0.0 && self.lag_min < self.lag_max && self.lag_max.is_finite()) {
            return bad("lag grid must satisfy 0 < lag_min < lag_max");
        }
        let (b0, b1) = self.bfi_range;
        if !(b0 > 0.0 && b0 <= b1 && b1.is_finite()) {
            return bad("bfi_range must be a positive interval");
        }
        let (be0, be1) = self.beta_range;
        if !(be0 > 0.0 && be0 <= be1 && be1 <= 1.0) {
            return bad("beta_range must lie within (0, 1]");
        }
        if !(self.mu_s_prime > 0.0 && self.mu_a >= 0.0 && self.wavelength > 0.0 && self.sdd > 0.0) {
            return bad("optical properties must be positive");
        }
        if !(self.refractive_index > 0.0 && (0.0..1.0).contains(&self.r_eff)) {
            return bad("refractive_index must be positive and r_eff in [0, 1)");
        }
        if !(self.bfi_label_unit > 0.0) {
            return bad("bfi_label_unit must be positive");
        }
        if let DcsNoise::LagScaledGaussian { intensity, averaging_time } = self.noise {
            if !(intensity > 0.0 && averaging_time > 0.0) {
                return bad("noise intensity and averaging time must be positive");
            }
        }
        Ok(())
    }

    /// Logarithmically spaced, strictly increasing lags.
    pub fn lags(&self) -> Vec<f64> {
        let (l0, l1) = (self.lag_min.ln(), self.lag_max.ln());
        let step = (l1 - l0) / (self.n_lags - 1) as f64;
        (0..self.n_lags)
            .map(|k| {
                if k == 0 {
                    self.lag_min
                } else if k == self.n_lags - 1 {
                    self.lag_max
                } else {
                    (l0 + step * k as f64).exp()
                }
            })
            .collect()
    }

    fn geometry(&self) -> (f64, f64) {
        let mu_t = self.mu_a + self.mu_s_prime;
        let z0 = 1.0 / mu_t;
        let zb = 2.0 * (1.0 + self.r_eff) / (3.0 * mu_t * (1.0 - self.r_eff));
        let r1 = (self.sdd * self.sdd + z0 * z0).sqrt();
        let rb = (self.sdd * self.sdd + (z0 + 2.0 * zb).powi(2)).sqrt();
        (r1, rb)
    }

    /// Unnormalised field autocorrelation `G₁(τ)` for flow index `bfi`.
    pub fn big_g1(&self, bfi: f64, tau: f64) -> f64 {
        let (r1, rb) = self.geometry();
        let k0 = 2.0 * PI * self.refractive_index / (self.wavelength * 1e-6);
        let k2 = 3.0 * self.mu_a * self.mu_s_prime + 6.0 * self.mu_s_prime.powi(2) * k0 * k0 * bfi * tau;
        let k = k2.sqrt();
        3.0 * self.mu_s_prime / (4.0 * PI) * ((-k * r1).exp() / r1 - (-k * rb).exp() / rb)
    }

    /// Normalised `g₁` over the lag grid.
    pub fn g1_curve(&self, bfi: f64) -> Vec<f64> {
        let g0 = self.big_g1(bfi, 0.0);
        self.lags().iter().map(|&t| self.big_g1(bfi, t) / g0).collect()
    }

    /// Noiseless `g₂ = 1 + β g₁²` over the lag grid.
    pub fn g2_curve(&self, bfi: f64, beta: f64) -> Vec<f64> {
        self.g1_curve(bfi).iter().map(|g| 1.0 + beta * g * g).collect()
    }

    /// Standard deviation of `g₂` at each lag under the configured noise.
    pub fn noise_std(&self, bfi: f64, beta: f64) -> Option<Vec<f64>> {
        let DcsNoise::LagScaledGaussian { intensity, averaging_time } = self.noise else {
            return None;
        };
        let lags = self.lags();
        let ratio = lags[1] / lags[0];
        let g0 = self.big_g1(bfi, 0.0);
        let g1 = |t: f64| self.big_g1(bfi, t) / g0;
        Some(
            lags.iter()
                .map(|&tau| {
                    // Correlator bin width grows with the lag.
                    let bin = tau * (1.0 - 1.0 / ratio);
                    let m = (tau / bin).round();
                    let gt = g1(bin).powi(2);
                    let gtau2 = g1(tau).powi(2);
                    let n = intensity * bin;
                    let decorr = (1.0 - gt).max(1e-12);
                    let speckle = beta * beta * ((1.0 + gt) * (1.0 + gtau2) + 2.0 * m * decorr * gtau2) / decorr;
                    let shot = 2.0 * beta * (1.0 + gtau2) / n + (1.0 + beta * gtau2.sqrt()) / (n * n);
                    (bin / averaging_time).sqrt() * (speckle + shot).sqrt()
                })
                .collect(),
        )
    }

    pub(crate) fn sample(&self, rng: &mut SampleRng) -> (Vec<f64>, Vec<f64>) {
        let bfi = draw(rng, self.bfi_range);
        let beta = draw(rng, self.beta_range);
        let mut g2 = self.g2_curve(bfi, beta);
        if let Some(std) = self.noise_std(bfi, beta) {
            for (v, s) in g2.iter_mut().zip(std) {
                let z: f64 = StandardNormal.sample(rng);
                *v += s * z;
            }
        }
        if self.subtract_baseline {
            g2.iter_mut().for_each(|v| *v -= 1.0);
        }
        (g2, vec![bfi / self.bfi_label_unit, beta])
    }

    pub(crate) fn params(&self) -> Params {
        let mut p: Params = vec![
            ("n_lags".into(), self.n_lags.to_string()),
            ("lag_min".into(), format!("{:?}", self.lag_min)),
            ("lag_max".into(), format!("{:?}", self.lag_max)),
            ("mu_s_prime".into(), format!("{:?}", self.mu_s_prime)),
            ("mu_a".into(), format!("{:?}", self.mu_a)),
            ("wavelength".into(), format!("{:?}", self.wavelength)),
            ("sdd".into(), format!("{:?}", self.sdd)),
            ("refractive_index".into(), format!("{:?}", self.refractive_index)),
            ("r_eff".into(), format!("{:?}", self.r_eff)),
            ("bfi_range".into(), fmt_range(self.bfi_range)),
            ("beta_range".into(), fmt_range(self.beta_range)),
            ("bfi_label_unit".into(), format!("{:?}", self.bfi_label_unit)),
            ("subtract_baseline".into(), self.subtract_baseline.to_string()),
        ];
        match self.noise {
            DcsNoise::None => p.push(("noise".into(), "none".into())),
            DcsNoise::LagScaledGaussian { intensity, averaging_time } => {
                p.push(("noise".into(), "lag_scaled_gaussian".into()));
                p.push(("intensity".into(), format!("{intensity:?}")));
                p.push(("averaging_time".into(), format!("{averaging_time:?}")));
            }
        }
        p
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n_lags" => self.n_lags = parse_usize(key, value)?,
            "lag_min" => self.lag_min = parse_f64(key, value)?,
            "lag_max" => self.lag_max = parse_f64(key, value)?,
            "mu_s_prime" => self.mu_s_prime = parse_f64(key, value)?,
            "mu_a" => self.mu_a = parse_f64(key, value)?,
            "wavelength" => self.wavelength = parse_f64(key, value)?,
            "sdd" => self.sdd = parse_f64(key, value)?,
            "refractive_index" => self.refractive_index = parse_f64(key, value)?,
            "r_eff" => self.r_eff = parse_f64(key, value)?,
            "bfi_range" => self.bfi_range = parse_range(key, value)?,
            "beta_range" => self.beta_range = parse_range(key, value)?,
            "bfi_label_unit" => self.bfi_label_unit = parse_f64(key, value)?,
            "subtract_baseline" => {
                self.subtract_baseline = value
                    .parse()
                    .map_err(|_| Error::InvalidSpec(format!("`{key}` expects true/false")))?
            }
            "noise" => {
                self.noise = match value {
                    "none" => DcsNoise::None,
                    "lag_scaled_gaussian" => match self.noise {
                        n @ DcsNoise::LagScaledGaussian { .. } => n,
                        DcsNoise::None => DcsNoise::LagScaledGaussian {
                            intensity: 1e5,
                            averaging_time: 1.0,
                        },
                    },
                    v => return Err(Error::InvalidSpec(format!("dcs noise `{v}`"))),
                }
            }
            "intensity" | "averaging_time" => {
                let v = parse_f64(key, value)?;
                let (mut intensity, mut averaging_time) = match self.noise {
                    DcsNoise::LagScaledGaussian { intensity, averaging_time } => (intensity, averaging_time),
                    DcsNoise::None => (1e5, 1.0),
                };
                if key == "intensity" {
                    intensity = v;
                } else {
                    averaging_time = v;
                }
                self.noise = DcsNoise::LagScaledGaussian { intensity, averaging_time };
            }
            _ => return Err(Error::InvalidSpec(format!("unknown dcs parameter `{key}`"))),
        }
        Ok(())
    }
}
