//! Extreme learning machine: frozen random hidden layer, pseudo-inverse
//! initial training and per-sample sequential updates.

pub mod io;
mod model;
mod online;

pub use model::{Activation, ElmModel, Topology};
pub use online::{
    assemble_state, batch_update, check_init_size, covariance_inverse, initial_train, obt_update, output_weights,
    output_weights_normal, rank_one_update, rank_one_update_with, Arith, Batch, Exact, ItDiagnostics, OnlineState,
};
