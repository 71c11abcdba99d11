//! Online sequential extreme learning machine with one-sided Jacobi SVD
//! initial training, synthetic single-photon datasets and a fixed-point
//! precision simulator.

pub mod cli;
pub mod config;
pub mod elm;
pub mod error;
pub mod fxp;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use elm::{Batch, ElmModel, OnlineState, Topology};
pub use error::{Error, ItStage, Result};
pub use linalg::{Matrix, PinvConfig};
