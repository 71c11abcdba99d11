//! Fixed-point emulation of sequential training and inference.
//!
//! Values stay in `f64` but are snapped to the grid of a signed fixed-point
//! format after every operation: round to nearest (ties to even) on
//! `v · 2^frac`, then saturate to the representable integer range. Initial
//! training runs in double precision; its `P` and `η` are quantised once at
//! the hand-off to the fixed-point stage. The scalar reciprocal of the
//! rank-one update is computed in double precision and quantised once.

use std::fmt::Write as _;

use crate::elm::{check_init_size, initial_train, rank_one_update_with, Arith, ElmModel, OnlineState, Topology};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, PinvConfig};
use crate::metrics::{agreement, regression_errors};
use crate::synth::{split, LabeledDataset, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overflow {
    Saturate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    NearestEven,
}

/// Signed format with `1 + int_bits + frac_bits` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FxpFormat {
    pub int_bits: u32,
    pub frac_bits: u32,
    pub overflow: Overflow,
    pub rounding: Rounding,
}

impl FxpFormat {
    pub fn new(int_bits: u32, frac_bits: u32) -> Result<Self> {
        if int_bits < 1 {
            return Err(Error::InvalidSpec("int_bits must be >= 1".into()));
        }
        if int_bits + frac_bits > 126 {
            return Err(Error::InvalidSpec("fixed-point word wider than 127 bits".into()));
        }
        Ok(FxpFormat {
            int_bits,
            frac_bits,
            overflow: Overflow::Saturate,
            rounding: Rounding::NearestEven,
        })
    }

    /// Largest stored integer, `2^(int+frac) − 1`.
    pub fn max_raw(&self) -> i128 {
        (1i128 << (self.int_bits + self.frac_bits)) - 1
    }

    /// Smallest stored integer, `−2^(int+frac)`.
    pub fn min_raw(&self) -> i128 {
        -(1i128 << (self.int_bits + self.frac_bits))
    }

    pub fn lsb(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }
}

/// Stateful quantiser that counts saturation events.
#[derive(Debug, Clone)]
pub struct Quantizer {
    fmt: FxpFormat,
    scale: f64,
    inv_scale: f64,
    hi: f64,
    lo: f64,
    saturations: u64,
}

impl Quantizer {
    pub fn new(fmt: FxpFormat) -> Self {
        Quantizer {
            fmt,
            scale: (fmt.frac_bits as f64).exp2(),
            inv_scale: (-(fmt.frac_bits as f64)).exp2(),
            hi: fmt.max_raw() as f64,
            lo: fmt.min_raw() as f64,
            saturations: 0,
        }
    }

    pub fn format(&self) -> FxpFormat {
        self.fmt
    }

    pub fn saturation_events(&self) -> u64 {
        self.saturations
    }

    /// Stored integer for `v`. NaN maps to zero and counts as a saturation.
    pub fn to_raw(&mut self, v: f64) -> i128 {
        if v.is_nan() {
            self.saturations += 1;
            return 0;
        }
        let r = (v * self.scale).round_ties_even();
        if r > self.hi {
            self.saturations += 1;
            self.fmt.max_raw()
        } else if r < self.lo {
            self.saturations += 1;
            self.fmt.min_raw()
        } else {
            r as i128
        }
    }

    pub fn quantize(&mut self, v: f64) -> FxpMatrix {
        let raw = self.to_raw(v);
        FxpMatrix {
            format: self.fmt,
            rows: 1,
            cols: 1,
            raw: vec![raw],
        }
    }

    pub fn quantize_matrix(&mut self, m: &Matrix) -> FxpMatrix {
        FxpMatrix {
            format: self.fmt,
            rows: m.rows(),
            cols: m.cols(),
            raw: m.as_slice().iter().map(|&v| self.to_raw(v)).collect(),
        }
    }

    /// Element-wise snap to the grid.
    pub fn round_matrix(&mut self, m: &Matrix) -> Matrix {
        m.map_with(|v| self.round(v))
    }
}

impl Arith for Quantizer {
    const GUARDED: bool = false;

    #[inline]
    fn round(&mut self, v: f64) -> f64 {
        if v.is_nan() {
            self.saturations += 1;
            return 0.0;
        }
        let mut r = (v * self.scale).round_ties_even();
        if r > self.hi {
            self.saturations += 1;
            r = self.hi;
        } else if r < self.lo {
            self.saturations += 1;
            r = self.lo;
        }
        r * self.inv_scale
    }
}

/// Fixed-point matrix holding `value · 2^frac_bits` as integers.
#[derive(Debug, Clone, PartialEq)]
pub struct FxpMatrix {
    pub format: FxpFormat,
    pub rows: usize,
    pub cols: usize,
    pub raw: Vec<i128>,
}

impl FxpMatrix {
    pub fn to_matrix(&self) -> Matrix {
        let lsb = self.format.lsb();
        Matrix::from_vec(self.rows, self.cols, self.raw.iter().map(|&r| r as f64 * lsb).collect())
            .expect("raw buffer matches shape")
    }

    /// Value of a `1 × 1` matrix.
    pub fn value(&self) -> f64 {
        self.raw[0] as f64 * self.format.lsb()
    }
}

impl Matrix {
    pub(crate) fn map_with(&self, mut f: impl FnMut(f64) -> f64) -> Matrix {
        let data = self.as_slice().iter().map(|&v| f(v)).collect();
        Matrix::from_vec(self.rows(), self.cols(), data).expect("same shape")
    }
}

/// Model weights snapped to a fixed-point grid.
#[derive(Debug, Clone)]
pub struct FxpModel {
    w: Matrix,
    b: Vec<f64>,
    model: ElmModel,
}

impl FxpModel {
    pub fn new(model: &ElmModel, q: &mut Quantizer) -> Self {
        FxpModel {
            w: q.round_matrix(model.input_weights()),
            b: model.bias().iter().map(|&v| q.round(v)).collect(),
            model: model.clone(),
        }
    }

    pub fn topology(&self) -> Topology {
        self.model.topology()
    }

    /// Hidden row with a rounded accumulate per input and a rounded
    /// activation output.
    pub fn hidden_row(&self, x: &[f64], q: &mut Quantizer) -> Result<Vec<f64>> {
        let topo = self.topology();
        if x.len() != topo.n_in {
            return Err(Error::dim("fxp hidden_row", (1, topo.n_in), (1, x.len())));
        }
        let xq: Vec<f64> = x.iter().map(|&v| q.round(v)).collect();
        let act = self.model.activation();
        let mut h = vec![0.0; topo.n_hidden];
        for (j, hj) in h.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (d, &xd) in xq.iter().enumerate() {
                acc = q.round(acc + xd * self.w[(d, j)]);
            }
            acc = q.round(acc + self.b[j]);
            *hj = q.round(act.apply(acc));
        }
        Ok(h)
    }

    pub fn infer_row(&self, x: &[f64], eta: &Matrix, q: &mut Quantizer) -> Result<Vec<f64>> {
        let h = self.hidden_row(x, q)?;
        let mut out = vec![0.0; eta.cols()];
        for (o, y) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &hk) in h.iter().enumerate() {
                acc = q.round(acc + hk * eta[(k, o)]);
            }
            *y = acc;
        }
        Ok(out)
    }

    pub fn infer(&self, x: &Matrix, eta: &Matrix, q: &mut Quantizer) -> Result<Matrix> {
        let mut data = Vec::with_capacity(x.rows() * eta.cols());
        for i in 0..x.rows() {
            data.extend(self.infer_row(x.row(i), eta, q)?);
        }
        Matrix::from_vec(x.rows(), eta.cols(), data)
    }
}

/// Snaps a double-precision training state onto the grid.
pub fn quantize_state(state: &OnlineState, q: &mut Quantizer) -> OnlineState {
    OnlineState {
        p: q.round_matrix(&state.p),
        eta: q.round_matrix(&state.eta),
        samples_seen: state.samples_seen,
    }
}

/// One sequential update with every intermediate quantised.
pub fn fxp_obt_update(state: &mut OnlineState, model: &FxpModel, x: &[f64], y: &[f64], q: &mut Quantizer) -> Result<()> {
    let h = model.hidden_row(x, q)?;
    let yq: Vec<f64> = y.iter().map(|&v| q.round(v)).collect();
    rank_one_update_with(state, &h, &yq, q)
}

/// Shared settings of a fractional-bit sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FxpStudyConfig {
    pub int_bits: u32,
    pub n_init: usize,
    pub hidden: usize,
    pub seed: u64,
    pub pinv: PinvConfig,
}

impl Default for FxpStudyConfig {
    fn default() -> Self {
        FxpStudyConfig {
            int_bits: 24,
            n_init: 250,
            hidden: 150,
            seed: 1,
            pinv: PinvConfig::default(),
        }
    }
}

/// Evaluation of one numeric setting.
#[derive(Debug, Clone, PartialEq)]
pub struct FxpEval {
    pub mae: Vec<f64>,
    pub mse: Vec<f64>,
    /// Classification only: fraction of correct argmax decisions.
    pub accuracy: Option<f64>,
    /// Classification only: fraction of argmax decisions equal to the
    /// double-precision pipeline's.
    pub agreement: Option<f64>,
    pub predictions: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FxpRow {
    pub frac_bits: u32,
    pub eval: FxpEval,
    pub saturation_events: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FxpSweep {
    pub baseline: FxpEval,
    pub rows: Vec<FxpRow>,
}

fn evaluate(pred: Matrix, truth: &Matrix, task: Task, reference: Option<&Matrix>) -> Result<FxpEval> {
    let (mae, mse) = regression_errors(&pred, truth)?;
    let (accuracy, agree) = match task {
        Task::Regression => (None, None),
        Task::Classification => (
            Some(agreement(&pred, truth)?),
            reference.map(|r| agreement(&pred, r)).transpose()?,
        ),
    };
    Ok(FxpEval {
        mae,
        mse,
        accuracy,
        agreement: agree,
        predictions: pred,
    })
}

/// Double-precision initial training, then fixed-point streaming and
/// inference for each entry of `frac_list`. `eval` supplies the rows the
/// reported errors are measured on.
pub fn sweep_frac_bits(train: &LabeledDataset, eval: &LabeledDataset, frac_list: &[u32], cfg: &FxpStudyConfig) -> Result<FxpSweep> {
    let topo = Topology::new(train.x.cols(), cfg.hidden, train.y.cols())?;
    check_init_size(cfg.n_init, cfg.hidden)?;
    let task = train.task();
    let model = ElmModel::init(topo, cfg.seed);
    let (init, stream) = split(train, cfg.n_init)?;
    let (state0, _) = initial_train(&model, &init, &cfg.pinv)?;

    let mut state = state0.clone();
    for (x, y) in stream.samples() {
        crate::elm::obt_update(&mut state, &model, x, y)?;
    }
    let base_pred = model.infer(&eval.x, &state.eta)?;
    let baseline = evaluate(base_pred, &eval.y, task, None)?;

    let mut rows = Vec::with_capacity(frac_list.len());
    for &frac in frac_list {
        let mut q = Quantizer::new(FxpFormat::new(cfg.int_bits, frac)?);
        let fmodel = FxpModel::new(&model, &mut q);
        let mut state = quantize_state(&state0, &mut q);
        for (x, y) in stream.samples() {
            fxp_obt_update(&mut state, &fmodel, x, y, &mut q)?;
        }
        let pred = fmodel.infer(&eval.x, &state.eta, &mut q)?;
        let eval = evaluate(pred, &eval.y, task, Some(&baseline.predictions))?;
        rows.push(FxpRow {
            frac_bits: frac,
            eval,
            saturation_events: q.saturation_events(),
        });
    }
    Ok(FxpSweep { baseline, rows })
}

impl FxpSweep {
    /// Columns `frac_bits,output_index,metric_name,value,saturation_events`.
    /// Double-precision reference rows carry `f64` in the first column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frac_bits,output_index,metric_name,value,saturation_events\n");
        let mut emit = |label: &str, e: &FxpEval, sat: u64| {
            for (o, (mae, mse)) in e.mae.iter().zip(&e.mse).enumerate() {
                let _ = writeln!(out, "{label},{o},mae,{mae:?},{sat}");
                let _ = writeln!(out, "{label},{o},mse,{mse:?},{sat}");
            }
            if let Some(a) = e.accuracy {
                let _ = writeln!(out, "{label},all,accuracy,{a:?},{sat}");
            }
            if let Some(a) = e.agreement {
                let _ = writeln!(out, "{label},all,agreement,{a:?},{sat}");
            }
        };
        emit("f64", &self.baseline, 0);
        for row in &self.rows {
            emit(&row.frac_bits.to_string(), &row.eval, row.saturation_events);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(int_bits: u32, frac: u32) -> Quantizer {
        Quantizer::new(FxpFormat::new(int_bits, frac).unwrap())
    }

    #[test]
    fn exact_values_survive() {
        assert_eq!(q(4, 1).quantize(0.5).value(), 0.5);
        assert_eq!(q(4, 1).round(-1.5), -1.5);
    }

    #[test]
    fn one_third_rounds_to_85_over_256() {
        let v = q(4, 8).quantize(1.0 / 3.0);
        assert_eq!(v.raw, vec![85]);
        assert_eq!(v.value(), 85.0 / 256.0);
    }

    #[test]
    fn ties_go_to_even() {
        let mut qq = q(4, 0);
        assert_eq!(qq.round(2.5), 2.0);
        assert_eq!(qq.round(3.5), 4.0);
        assert_eq!(qq.round(-2.5), -2.0);
    }

    #[test]
    fn overflow_saturates_and_is_counted() {
        for frac in [0, 4, 12, 30] {
            let mut qq = q(5, frac);
            let v = qq.quantize(32.0 + 1.0);
            assert_eq!(v.raw[0], qq.format().max_raw());
            assert_eq!(qq.saturation_events(), 1);
            let v = qq.quantize(-1e9);
            assert_eq!(v.raw[0], qq.format().min_raw());
            assert_eq!(qq.saturation_events(), 2);
        }
    }

    #[test]
    fn tiny_values_flush_to_zero() {
        let mut qq = q(8, 4);
        assert_eq!(qq.round(0.01), 0.0);
        assert_eq!(qq.saturation_events(), 0);
    }

    #[test]
    fn format_validation() {
        assert!(FxpFormat::new(0, 8).is_err());
        assert!(FxpFormat::new(100, 40).is_err());
        let f = FxpFormat::new(3, 2).unwrap();
        assert_eq!(f.max_raw(), 31);
        assert_eq!(f.min_raw(), -32);
    }

    #[test]
    fn matrix_round_trip_on_grid() {
        let mut qq = q(6, 10);
        let m = Matrix::from_rows(&[[0.25, -3.0], [1.0 / 1024.0, 7.5]]).unwrap();
        assert_eq!(qq.quantize_matrix(&m).to_matrix(), m);
    }
}
