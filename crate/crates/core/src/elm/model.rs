use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{stream_rng, WEIGHT_STREAM};

/// Layer widths `(#IN, L, #ON)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Topology {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
}

impl Topology {
    pub fn new(n_in: usize, n_hidden: usize, n_out: usize) -> Result<Self> {
        if n_in == 0 || n_hidden == 0 || n_out == 0 {
            return Err(Error::InvalidSpec(format!(
                "topology ({n_in}, {n_hidden}, {n_out}) has an empty layer"
            )));
        }
        Ok(Topology { n_in, n_hidden, n_out })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
}

impl Activation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Sigmoid),
            t => Err(Error::Format(format!("unknown activation tag {t}"))),
        }
    }

    /// Output is clamped into the open interval (0, 1) so that saturated
    /// inputs never produce an exact 0 or 1.
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
            }
        }
    }
}

/// Single-hidden-layer network with frozen random input weights.
///
/// `W` and `b` are fixed at construction; only the output weights `η` change.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    topo: Topology,
    w: Matrix,
    b: Vec<f64>,
    eta: Matrix,
    activation: Activation,
}

impl ElmModel {
    /// Draws `W` (`n_in × L`) and then `b` (length `L`) i.i.d. uniform on
    /// `[-1, 1]` from the weight stream of `seed`. `η` starts at zero.
    pub fn init(topo: Topology, seed: u64) -> Self {
        let mut rng = stream_rng(seed, WEIGHT_STREAM);
        let w = Matrix::from_fn(topo.n_in, topo.n_hidden, |_, _| rng.random_range(-1.0..=1.0));
        let b = (0..topo.n_hidden).map(|_| rng.random_range(-1.0..=1.0)).collect();
        ElmModel {
            topo,
            w,
            b,
            eta: Matrix::zeros(topo.n_hidden, topo.n_out),
            activation: Activation::Sigmoid,
        }
    }

    pub(crate) fn from_parts(topo: Topology, w: Matrix, b: Vec<f64>, eta: Matrix, activation: Activation) -> Result<Self> {
        if w.shape() != (topo.n_in, topo.n_hidden) {
            return Err(Error::dim("model W", (topo.n_in, topo.n_hidden), w.shape()));
        }
        if b.len() != topo.n_hidden {
            return Err(Error::dim("model b", (topo.n_hidden, 1), (b.len(), 1)));
        }
        if eta.shape() != (topo.n_hidden, topo.n_out) {
            return Err(Error::dim("model eta", (topo.n_hidden, topo.n_out), eta.shape()));
        }
        Ok(ElmModel { topo, w, b, eta, activation })
    }

    pub fn topology(&self) -> Topology {
        self.topo
    }

    pub fn input_weights(&self) -> &Matrix {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn eta(&self) -> &Matrix {
        &self.eta
    }

    /// Replaces the output weights, keeping `W` and `b`.
    pub fn set_eta(&mut self, eta: Matrix) -> Result<()> {
        if eta.shape() != self.eta.shape() {
            return Err(Error::dim("set_eta", self.eta.shape(), eta.shape()));
        }
        if !eta.is_finite() {
            return Err(Error::Numeric {
                context: "output weights".into(),
            });
        }
        self.eta = eta;
        Ok(())
    }

    /// `H = Φ(xW + b)` for a `k × n_in` block of samples.
    pub fn hidden_activations(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.topo.n_in {
            return Err(Error::dim("hidden_activations", (x.rows(), self.topo.n_in), x.shape()));
        }
        let mut h = x.matmul(&self.w)?;
        for i in 0..h.rows() {
            for (v, &bj) in h.row_mut(i).iter_mut().zip(&self.b) {
                *v = self.activation.apply(*v + bj);
            }
        }
        Ok(h)
    }

    /// Hidden activations of one sample.
    pub fn hidden_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.w.vecmat(x)?;
        for (v, &bj) in z.iter_mut().zip(&self.b) {
            *v = self.activation.apply(*v + bj);
        }
        Ok(z)
    }

    /// `ŷ = H(x) η` with caller-supplied output weights.
    pub fn infer(&self, x: &Matrix, eta: &Matrix) -> Result<Matrix> {
        if eta.rows() != self.topo.n_hidden {
            return Err(Error::dim("infer", (self.topo.n_hidden, self.topo.n_out), eta.shape()));
        }
        self.hidden_activations(x)?.matmul(eta)
    }

    /// Inference with the model's own `η`.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        self.infer(x, &self.eta)
    }
}
