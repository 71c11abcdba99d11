//! Initial training and sequential updates of the output weights.
//!
//! Initial training solves two independent pseudo-inverses on the first
//! `N₀` hidden activations `H₀`:
//!
//! * `P₀ = pinv(H₀ᵀH₀)`, the running inverse covariance;
//! * `η₀ = pinv(H₀) y₀`, the least-squares output weights.
//!
//! Each later sample `(x, y)` with hidden row `h` then updates
//!
//! ```text
//! P ← P − (P hᵀ)(h P) / (1 + h P hᵀ)
//! η ← η + P hᵀ (y − h η_old)
//! ```
//!
//! using the freshly updated `P` in the `η` step. [`batch_update`] keeps the
//! general `k`-row form with a `k × k` inner pseudo-inverse; it is used for
//! batch-size sweeps and as a cross-check of the rank-one path.

use log::warn;

use crate::elm::model::ElmModel;
use crate::error::{Error, Result};
use crate::linalg::{pinv, Matrix, Pinv, PinvConfig, RankStatus};

/// `k` samples with their targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub x: Matrix,
    pub y: Matrix,
}

impl Batch {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::dim("batch", (x.rows(), y.cols()), y.shape()));
        }
        Ok(Batch { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }
}

/// Running `(P, η)` pair of the sequential learner.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineState {
    /// `L × L`, kept symmetric.
    pub p: Matrix,
    /// `L × n_out`.
    pub eta: Matrix,
    pub samples_seen: usize,
}

/// Rank information from the two pseudo-inverses of initial training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItDiagnostics {
    pub p_rank: usize,
    pub p_status: RankStatus,
    pub p_sweeps: usize,
    pub eta_rank: usize,
    pub eta_status: RankStatus,
    pub eta_sweeps: usize,
}

impl ItDiagnostics {
    pub fn rank_deficient(&self) -> bool {
        self.p_status == RankStatus::RankDeficient || self.eta_status == RankStatus::RankDeficient
    }
}

/// Rounding applied after every multiply-accumulate and scalar result of the
/// sequential update. [`Exact`] leaves values untouched; the fixed-point
/// simulator supplies a quantising implementation.
pub trait Arith {
    /// Whether a non-positive denominator or a non-finite result aborts the
    /// update. Saturating arithmetic never produces non-finite values and
    /// keeps going the way hardware would.
    const GUARDED: bool = true;

    fn round(&mut self, v: f64) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Exact;

impl Arith for Exact {
    #[inline(always)]
    fn round(&mut self, v: f64) -> f64 {
        v
    }
}

/// Checks `N₀ ≥ L`; warns when `N₀ == L`.
pub fn check_init_size(n_init: usize, hidden: usize) -> Result<()> {
    if n_init < hidden {
        return Err(Error::InsufficientInitBatch { n_init, hidden });
    }
    if n_init == hidden {
        warn!("initial batch size equals hidden width ({hidden}); HᵀH may be near-singular");
    }
    Ok(())
}

/// `pinv(H₀ᵀH₀)`, symmetrised.
pub fn covariance_inverse(h0: &Matrix, cfg: &PinvConfig) -> Result<Pinv> {
    let a = h0.t_matmul(h0)?;
    let mut p = pinv(&a, cfg)?;
    p.matrix.symmetrize();
    Ok(p)
}

/// `pinv(H₀) y₀`.
pub fn output_weights(h0: &Matrix, y0: &Matrix, cfg: &PinvConfig) -> Result<(Matrix, Pinv)> {
    if h0.rows() != y0.rows() {
        return Err(Error::dim("output_weights", (h0.rows(), y0.cols()), y0.shape()));
    }
    let p = pinv(h0, cfg)?;
    let eta = p.matrix.matmul(y0)?;
    Ok((eta, p))
}

/// Alternative `η₀ = P₀ H₀ᵀ y₀`, kept for cross-validation of
/// [`output_weights`].
pub fn output_weights_normal(p0: &Matrix, h0: &Matrix, y0: &Matrix) -> Result<Matrix> {
    p0.matmul(&h0.t_matmul(y0)?)
}

pub fn assemble_state(p: Pinv, eta: Matrix, eta_pinv: &Pinv, n_init: usize) -> Result<(OnlineState, ItDiagnostics)> {
    let diag = ItDiagnostics {
        p_rank: p.rank,
        p_status: p.status,
        p_sweeps: p.sweeps_used,
        eta_rank: eta_pinv.rank,
        eta_status: eta_pinv.status,
        eta_sweeps: eta_pinv.sweeps_used,
    };
    if diag.rank_deficient() {
        warn!("initial training is rank deficient: {diag:?}");
    }
    if !p.matrix.is_finite() || !eta.is_finite() {
        return Err(Error::Numeric {
            context: "initial training".into(),
        });
    }
    Ok((
        OnlineState {
            p: p.matrix,
            eta,
            samples_seen: n_init,
        },
        diag,
    ))
}

/// Initial training on `N₀ ≥ L` samples.
pub fn initial_train(model: &ElmModel, batch: &Batch, cfg: &PinvConfig) -> Result<(OnlineState, ItDiagnostics)> {
    let topo = model.topology();
    check_init_size(batch.len(), topo.n_hidden)?;
    if batch.y.cols() != topo.n_out {
        return Err(Error::dim("initial_train", (batch.len(), topo.n_out), batch.y.shape()));
    }
    let h0 = model.hidden_activations(&batch.x)?;
    let p = covariance_inverse(&h0, cfg)?;
    let (eta, eta_pinv) = output_weights(&h0, &batch.y, cfg)?;
    assemble_state(p, eta, &eta_pinv, batch.len())
}

/// Rank-one update from a precomputed hidden row `h`, with every
/// intermediate passed through `arith`.
pub fn rank_one_update_with<A: Arith>(state: &mut OnlineState, h: &[f64], y: &[f64], arith: &mut A) -> Result<()> {
    let l = state.p.rows();
    let n_out = state.eta.cols();
    if h.len() != l {
        return Err(Error::dim("rank_one_update", (1, l), (1, h.len())));
    }
    if y.len() != n_out {
        return Err(Error::dim("rank_one_update", (1, n_out), (1, y.len())));
    }
    let sample = state.samples_seen;
    let bad = || Error::NumericAtSample { sample };

    // P hᵀ (equal to (h P)ᵀ for symmetric P).
    let mut ph = vec![0.0; l];
    for (i, out) in ph.iter_mut().enumerate() {
        let row = state.p.row(i);
        let mut acc = 0.0;
        for (&pik, &hk) in row.iter().zip(h) {
            acc = arith.round(acc + pik * hk);
        }
        *out = acc;
    }
    let mut hph = 0.0;
    for (&hi, &phi) in h.iter().zip(&ph) {
        hph = arith.round(hph + hi * phi);
    }
    let denom = arith.round(1.0 + hph);
    if A::GUARDED && (!denom.is_finite() || denom <= 0.0) {
        return Err(bad());
    }
    let recip = arith.round(1.0 / denom);
    let gain: Vec<f64> = ph.iter().map(|&v| arith.round(v * recip)).collect();

    // Residual against the old η.
    let mut err = vec![0.0; n_out];
    for (o, e) in err.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &hk) in h.iter().enumerate() {
            acc = arith.round(acc + hk * state.eta[(k, o)]);
        }
        *e = arith.round(y[o] - acc);
    }

    for i in 0..l {
        let gi = gain[i];
        let row = state.p.row_mut(i);
        for (pij, &phj) in row.iter_mut().zip(&ph) {
            *pij = arith.round(*pij - gi * phj);
        }
    }
    for i in 0..l {
        for j in (i + 1)..l {
            let avg = arith.round(0.5 * (state.p[(i, j)] + state.p[(j, i)]));
            state.p[(i, j)] = avg;
            state.p[(j, i)] = avg;
        }
    }

    for i in 0..l {
        let row = state.p.row(i);
        let mut acc = 0.0;
        for (&pik, &hk) in row.iter().zip(h) {
            acc = arith.round(acc + pik * hk);
        }
        let eta_row = state.eta.row_mut(i);
        for (e, &r) in eta_row.iter_mut().zip(&err) {
            *e = arith.round(*e + acc * r);
        }
    }

    if A::GUARDED && (!state.eta.is_finite() || !state.p.is_finite()) {
        return Err(bad());
    }
    state.samples_seen += 1;
    Ok(())
}

/// Rank-one update in double precision.
pub fn rank_one_update(state: &mut OnlineState, h: &[f64], y: &[f64]) -> Result<()> {
    rank_one_update_with(state, h, y, &mut Exact)
}

/// One-sample sequential update.
pub fn obt_update(state: &mut OnlineState, model: &ElmModel, x: &[f64], y: &[f64]) -> Result<()> {
    let h = model.hidden_row(x)?;
    rank_one_update(state, &h, y)
}

/// General `k`-sample update
/// `P ← P − P Hᵀ (I + H P Hᵀ)⁻¹ H P`, `η ← η + P Hᵀ (Y − H η_old)`,
/// with the inner inverse taken by [`pinv`].
pub fn batch_update(state: &mut OnlineState, model: &ElmModel, batch: &Batch, cfg: &PinvConfig) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Range {
            what: "batch size",
            detail: "k must be at least 1".into(),
        });
    }
    if batch.y.cols() != state.eta.cols() {
        return Err(Error::dim("batch_update", (batch.len(), state.eta.cols()), batch.y.shape()));
    }
    let sample = state.samples_seen;
    let h = model.hidden_activations(&batch.x)?;
    let ht = h.transpose();
    let pht = state.p.matmul(&ht)?;
    let hp = h.matmul(&state.p)?;
    let inner = Matrix::identity(batch.len()).add(&h.matmul(&pht)?)?;
    let inner_inv = pinv(&inner, cfg).map_err(|_| Error::NumericAtSample { sample })?;
    let correction = pht.matmul(&inner_inv.matrix)?.matmul(&hp)?;
    let mut p = state.p.sub(&correction)?;
    p.symmetrize();

    let resid = batch.y.sub(&h.matmul(&state.eta)?)?;
    let eta = state.eta.add(&p.matmul(&ht)?.matmul(&resid)?)?;
    if !p.is_finite() || !eta.is_finite() {
        return Err(Error::NumericAtSample { sample });
    }
    state.p = p;
    state.eta = eta;
    state.samples_seen += batch.len();
    Ok(())
}
