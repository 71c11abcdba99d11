//! Synthetic LiDAR-through-fog histograms for classification.
//!
//! Each class owns a contiguous interval of return-peak positions. A sample
//! is a Gaussian return peak inside its class interval on top of an
//! exponentially decaying fog backscatter, with Poisson counting noise and
//! max-normalisation. Labels are one-hot over the classes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::Rng as SampleRng;
use crate::synth::flim::{normalize_max, poisson, CountNoise};
use crate::synth::params::{fmt_range, parse_f64, parse_range, parse_usize, Params};

#[derive(Debug, Clone, PartialEq)]
pub struct FogHistSpec {
    pub n_bins: usize,
    pub n_classes: usize,
    /// Peak positions (bin units) span this interval, split evenly across
    /// classes.
    pub peak_span: (f64, f64),
    /// Standard deviation of the return peak, bins.
    pub peak_width: f64,
    /// Per-bin decay rate of the fog backscatter.
    pub fog_tail_rate: f64,
    /// Ratio of return-peak amplitude to fog amplitude; `inf` disables fog.
    pub signal_to_fog_ratio: f64,
    /// Per-sample fog density variation: the ratio is drawn log-uniformly
    /// from `[r / spread, r · spread]`. `1` keeps it fixed.
    pub ratio_spread: f64,
    /// Combined peak amplitude of return and fog, counts.
    pub photons: f64,
    pub noise: CountNoise,
}

impl Default for FogHistSpec {
    fn default() -> Self {
        FogHistSpec {
            n_bins: 50,
            n_classes: 8,
            peak_span: (5.0, 45.0),
            peak_width: 1.5,
            fog_tail_rate: 0.1,
            signal_to_fog_ratio: 0.3,
            ratio_spread: 5.0,
            photons: 200.0,
            noise: CountNoise::Poisson,
        }
    }
}

impl FogHistSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(format!("fog: {m}")));
        if self.n_bins == 0 || self.n_classes < 2 {
            return bad("need n_bins >= 1 and n_classes >= 2");
        }
        let (lo, hi) = self.peak_span;
        if !(lo >= 0.0 && lo < hi && hi <= self.n_bins as f64) {
            return bad("peak_span must be a non-empty interval inside the histogram");
        }
        if !(self.peak_width > 0.0 && self.fog_tail_rate >= 0.0 && self.photons > 0.0) {
            return bad("peak_width and photons must be positive, fog_tail_rate non-negative");
        }
        if !(self.signal_to_fog_ratio >= 0.0) {
            return bad("signal_to_fog_ratio must be non-negative");
        }
        if !(self.ratio_spread >= 1.0 && self.ratio_spread.is_finite()) {
            return bad("ratio_spread must be a finite value >= 1");
        }
        Ok(())
    }

    /// Interval of peak positions belonging to `class`.
    pub fn peak_position_range(&self, class: usize) -> (f64, f64) {
        let (lo, hi) = self.peak_span;
        let w = (hi - lo) / self.n_classes as f64;
        (lo + w * class as f64, lo + w * (class + 1) as f64)
    }

    fn amplitudes(&self, r: f64) -> (f64, f64) {
        if r.is_infinite() {
            (self.photons, 0.0)
        } else {
            (self.photons * r / (1.0 + r), self.photons / (1.0 + r))
        }
    }

    /// Expected counts for a return peak at `position` at the nominal
    /// signal-to-fog ratio.
    pub fn clean_histogram(&self, position: f64) -> Vec<f64> {
        self.histogram_at_ratio(position, self.signal_to_fog_ratio)
    }

    pub fn histogram_at_ratio(&self, position: f64, ratio: f64) -> Vec<f64> {
        let (a_sig, a_fog) = self.amplitudes(ratio);
        (0..self.n_bins)
            .map(|t| {
                let t = t as f64;
                let d = (t - position) / self.peak_width;
                a_sig * (-0.5 * d * d).exp() + a_fog * (-self.fog_tail_rate * t).exp()
            })
            .collect()
    }

    pub(crate) fn sample(&self, rng: &mut SampleRng) -> (Vec<f64>, Vec<f64>, usize) {
        let class = rng.random_range(0..self.n_classes);
        let (lo, hi) = self.peak_position_range(class);
        let position = rng.random_range(lo..hi);
        let mut ratio = self.signal_to_fog_ratio;
        if self.ratio_spread > 1.0 {
            let l = self.ratio_spread.ln();
            ratio *= rng.random_range(-l..l).exp();
        }
        let mut hist = self.histogram_at_ratio(position, ratio);
        if self.noise == CountNoise::Poisson {
            for v in hist.iter_mut() {
                *v = poisson(rng, *v);
            }
        }
        normalize_max(&mut hist);
        let mut label = vec![0.0; self.n_classes];
        label[class] = 1.0;
        (hist, label, class)
    }

    pub(crate) fn params(&self) -> Params {
        vec![
            ("n_bins".into(), self.n_bins.to_string()),
            ("n_classes".into(), self.n_classes.to_string()),
            ("peak_span".into(), fmt_range(self.peak_span)),
            ("peak_width".into(), format!("{:?}", self.peak_width)),
            ("fog_tail_rate".into(), format!("{:?}", self.fog_tail_rate)),
            ("signal_to_fog_ratio".into(), format!("{:?}", self.signal_to_fog_ratio)),
            ("ratio_spread".into(), format!("{:?}", self.ratio_spread)),
            ("photons".into(), format!("{:?}", self.photons)),
            (
                "noise".into(),
                match self.noise {
                    CountNoise::None => "none".into(),
                    CountNoise::Poisson => "poisson".into(),
                },
            ),
        ]
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n_bins" => self.n_bins = parse_usize(key, value)?,
            "n_classes" => self.n_classes = parse_usize(key, value)?,
            "peak_span" => self.peak_span = parse_range(key, value)?,
            "peak_width" => self.peak_width = parse_f64(key, value)?,
            "fog_tail_rate" => self.fog_tail_rate = parse_f64(key, value)?,
            "signal_to_fog_ratio" => self.signal_to_fog_ratio = parse_f64(key, value)?,
            "ratio_spread" => self.ratio_spread = parse_f64(key, value)?,
            "photons" => self.photons = parse_f64(key, value)?,
            "noise" => {
                self.noise = match value {
                    "none" => CountNoise::None,
                    "poisson" => CountNoise::Poisson,
                    v => return Err(Error::InvalidSpec(format!("fog noise `{v}`"))),
                }
            }
            _ => return Err(Error::InvalidSpec(format!("unknown fog parameter `{key}`"))),
        }
        Ok(())
    }
}
