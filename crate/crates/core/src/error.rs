use std::fmt;
use std::io;

use thiserror::Error;

/// Stage of the two-task initial training schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItStage {
    /// Hidden activations of the initial batch (task A).
    Hidden,
    /// Pseudo-inverse of `HᵀH` (task A).
    Covariance,
    /// Pseudo-inverse of `H` times the targets (task B).
    OutputWeights,
}

impl fmt::Display for ItStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ItStage::Hidden => "task-A/hidden-activations",
            ItStage::Covariance => "task-A/covariance-pinv",
            ItStage::OutputWeights => "task-B/output-weights",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected:?}, got {got:?}")]
    Dimension {
        op: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("non-finite value in {context}")]
    Numeric { context: String },

    #[error("non-finite intermediate at sample {sample}")]
    NumericAtSample { sample: usize },

    #[error("initial batch too small: N0 = {n_init} < L = {hidden}")]
    InsufficientInitBatch { n_init: usize, hidden: usize },

    #[error("{what} out of range: {detail}")]
    Range { what: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidSpec(String),

    #[error("initial training stage {stage} failed: {reason}")]
    TaskFailed { stage: ItStage, reason: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(op: &'static str, expected: (usize, usize), got: (usize, usize)) -> Self {
        Error::Dimension { op, expected, got }
    }
}
