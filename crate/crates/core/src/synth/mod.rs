//! Labelled synthetic datasets: fluorescence decays, DCS autocorrelation
//! curves and fog-LiDAR histograms.
//!
//! Sample `i` of a dataset draws from its own random stream `(seed, i)`, so
//! any subset of samples can be regenerated independently and parallel
//! generation matches serial generation bit for bit.

mod dcs;
mod flim;
mod fog;
mod params;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use dcs::{DcsNoise, DcsSpec};
pub use flim::{lifetime_labels, CountNoise, FlimDecaySpec, FWHM_PER_SIGMA};
pub use fog::FogHistSpec;
pub use params::Params;

use crate::elm::Batch;
use crate::error::{Error, Result};
use crate::linalg::io::{load_matrix, save_matrix, to_csv};
use crate::linalg::Matrix;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Flim,
    Dcs,
    Fog,
}

/// Whether outputs are continuous targets or one-hot classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Regression,
    Classification,
}

impl TaskKind {
    pub fn task(self) -> Task {
        match self {
            TaskKind::Flim | TaskKind::Dcs => Task::Regression,
            TaskKind::Fog => Task::Classification,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Flim => "flim",
            TaskKind::Dcs => "dcs",
            TaskKind::Fog => "fog",
        })
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flim" => Ok(TaskKind::Flim),
            "dcs" => Ok(TaskKind::Dcs),
            "fog" => Ok(TaskKind::Fog),
            other => Err(Error::InvalidSpec(format!("unknown dataset kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Flim(FlimDecaySpec),
    Dcs(DcsSpec),
    Fog(FogHistSpec),
}

impl DatasetSpec {
    pub fn default_for(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Flim => DatasetSpec::Flim(FlimDecaySpec::default()),
            TaskKind::Dcs => DatasetSpec::Dcs(DcsSpec::default()),
            TaskKind::Fog => DatasetSpec::Fog(FogHistSpec::default()),
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            DatasetSpec::Flim(_) => TaskKind::Flim,
            DatasetSpec::Dcs(_) => TaskKind::Dcs,
            DatasetSpec::Fog(_) => TaskKind::Fog,
        }
    }

    pub fn n_in(&self) -> usize {
        match self {
            DatasetSpec::Flim(s) => s.n_bins,
            DatasetSpec::Dcs(s) => s.n_lags,
            DatasetSpec::Fog(s) => s.n_bins,
        }
    }

    pub fn n_out(&self) -> usize {
        match self {
            DatasetSpec::Flim(_) | DatasetSpec::Dcs(_) => 2,
            DatasetSpec::Fog(s) => s.n_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DatasetSpec::Flim(s) => s.validate(),
            DatasetSpec::Dcs(s) => s.validate(),
            DatasetSpec::Fog(s) => s.validate(),
        }
    }

    pub fn params(&self) -> Params {
        match self {
            DatasetSpec::Flim(s) => s.params(),
            DatasetSpec::Dcs(s) => s.params(),
            DatasetSpec::Fog(s) => s.params(),
        }
    }

    /// Sets a parameter by name; dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        match self {
            DatasetSpec::Flim(s) => s.set(&key, value),
            DatasetSpec::Dcs(s) => s.set(&key, value),
            DatasetSpec::Fog(s) => s.set(&key, value),
        }
    }

    /// Input and target rows of sample `index`.
    pub fn sample(&self, seed: u64, index: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rng = stream_rng(seed, index as u64);
        match self {
            DatasetSpec::Flim(s) => s.sample(&mut rng),
            DatasetSpec::Dcs(s) => s.sample(&mut rng),
            DatasetSpec::Fog(s) => {
                let (x, y, _) = s.sample(&mut rng);
                (x, y)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub spec: DatasetSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    /// `N × n_in`.
    pub x: Matrix,
    /// `N × n_out`.
    pub y: Matrix,
    pub meta: DatasetMeta,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn task(&self) -> Task {
        self.meta.spec.kind().task()
    }
}

/// Generates `n` samples of `spec` from `seed`.
pub fn generate(spec: &DatasetSpec, n: usize, seed: u64) -> Result<LabeledDataset> {
    generate_range(spec, 0, n, seed)
}

/// Samples `start..start + n` of the stream defined by `(spec, seed)`.
pub fn generate_range(spec: &DatasetSpec, start: usize, n: usize, seed: u64) -> Result<LabeledDataset> {
    spec.validate()?;
    let (n_in, n_out) = (spec.n_in(), spec.n_out());
    let mut xs = Vec::with_capacity(n * n_in);
    let mut ys = Vec::with_capacity(n * n_out);
    for i in start..start + n {
        let (x, y) = spec.sample(seed, i);
        xs.extend_from_slice(&x);
        ys.extend_from_slice(&y);
    }
    Ok(LabeledDataset {
        x: Matrix::from_vec(n, n_in, xs)?,
        y: Matrix::from_vec(n, n_out, ys)?,
        meta: DatasetMeta {
            spec: spec.clone(),
            seed,
        },
    })
}

pub fn gen_flim(spec: &FlimDecaySpec, n: usize, seed: u64) -> Result<LabeledDataset> {
    generate(&DatasetSpec::Flim(spec.clone()), n, seed)
}

pub fn gen_dcs(spec: &DcsSpec, n: usize, seed: u64) -> Result<LabeledDataset> {
    generate(&DatasetSpec::Dcs(spec.clone()), n, seed)
}

pub fn gen_fog_hist(spec: &FogHistSpec, n: usize, seed: u64) -> Result<LabeledDataset> {
    generate(&DatasetSpec::Fog(spec.clone()), n, seed)
}

/// First `n_init` rows for initial training, the rest for streaming.
pub fn split(ds: &LabeledDataset, n_init: usize) -> Result<(Batch, Batch)> {
    let n = ds.len();
    if n_init > n {
        return Err(Error::Range {
            what: "n_init",
            detail: format!("{n_init} exceeds dataset size {n}"),
        });
    }
    let init = Batch::new(ds.x.slice_rows(0, n_init), ds.y.slice_rows(0, n_init))?;
    let stream = Batch::new(ds.x.slice_rows(n_init, n), ds.y.slice_rows(n_init, n))?;
    Ok((init, stream))
}

impl Batch {
    /// `(x, y)` row pairs in order.
    pub fn samples(&self) -> impl Iterator<Item = (&[f64], &[f64])> + '_ {
        (0..self.len()).map(move |i| (self.x.row(i), self.y.row(i)))
    }
}

/// File names used for a dataset stored under `prefix`.
pub fn dataset_paths(prefix: impl AsRef<Path>) -> (PathBuf, PathBuf, PathBuf) {
    let p = prefix.as_ref().as_os_str().to_owned();
    let with = |ext: &str| {
        let mut s = p.clone();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".x.osem"), with(".y.osem"), with(".meta"))
}

/// `kind`, `n`, `seed` and every spec parameter as `key=value` lines.
pub fn metadata_text(ds: &LabeledDataset) -> String {
    let mut out = format!(
        "kind={}\nn={}\nseed={}\n",
        ds.meta.spec.kind(),
        ds.len(),
        ds.meta.seed
    );
    for (k, v) in ds.meta.spec.params() {
        out.push_str(&format!("{k}={v}\n"));
    }
    out
}

pub fn save_dataset(prefix: impl AsRef<Path>, ds: &LabeledDataset) -> Result<()> {
    let (xp, yp, mp) = dataset_paths(prefix);
    save_matrix(xp, &ds.x)?;
    save_matrix(yp, &ds.y)?;
    fs::write(mp, metadata_text(ds))?;
    Ok(())
}

pub fn load_dataset(prefix: impl AsRef<Path>) -> Result<LabeledDataset> {
    let (xp, yp, mp) = dataset_paths(prefix);
    let x = load_matrix(xp)?;
    let y = load_matrix(yp)?;
    let text = fs::read_to_string(mp)?;
    let mut spec = None;
    let mut seed = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("metadata line without `=`: {line}")))?;
        match k {
            "kind" => spec = Some(DatasetSpec::default_for(v.parse()?)),
            "n" => {}
            "seed" => seed = v.parse().map_err(|_| Error::Format(format!("bad seed `{v}`")))?,
            _ => spec
                .as_mut()
                .ok_or_else(|| Error::Format("metadata must start with kind=".into()))?
                .set(k, v)?,
        }
    }
    let spec = spec.ok_or_else(|| Error::Format("metadata lacks kind".into()))?;
    if x.rows() != y.rows() || x.cols() != spec.n_in() || y.cols() != spec.n_out() {
        return Err(Error::Format("dataset matrices disagree with metadata".into()));
    }
    Ok(LabeledDataset {
        x,
        y,
        meta: DatasetMeta { spec, seed },
    })
}

/// Inputs followed by targets, one sample per line.
pub fn dataset_csv(ds: &LabeledDataset) -> String {
    let joined = Matrix::from_fn(ds.len(), ds.x.cols() + ds.y.cols(), |i, j| {
        if j < ds.x.cols() {
            ds.x[(i, j)]
        } else {
            ds.y[(i, j - ds.x.cols())]
        }
    });
    to_csv(&joined)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let ds = gen_fog_hist(&FogHistSpec::default(), 20, 1).unwrap();
        let (init, stream) = split(&ds, 5).unwrap();
        assert_eq!((init.len(), stream.len()), (5, 15));
        let (_, stream) = split(&ds, 20).unwrap();
        assert!(stream.is_empty());
        assert!(matches!(split(&ds, 21), Err(Error::Range { .. })));
    }

    #[test]
    fn samples_are_index_addressable() {
        let spec = DatasetSpec::default_for(TaskKind::Flim);
        let all = generate(&spec, 12, 9).unwrap();
        let tail = generate_range(&spec, 7, 5, 9).unwrap();
        assert_eq!(all.x.slice_rows(7, 12), tail.x);
        assert_eq!(all.y.slice_rows(7, 12), tail.y);
    }

    #[test]
    fn set_accepts_dashed_keys() {
        let mut spec = DatasetSpec::default_for(TaskKind::Dcs);
        spec.set("beta-range", "0.2:0.6").unwrap();
        match spec {
            DatasetSpec::Dcs(s) => assert_eq!(s.beta_range, (0.2, 0.6)),
            _ => unreachable!(),
        }
    }
}
