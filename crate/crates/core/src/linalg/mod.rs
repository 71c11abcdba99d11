//! Dense linear algebra: matrix kernels, one-sided Jacobi SVD, pseudo-inverse
//! and matrix file formats.

pub mod io;
mod matrix;
mod svd;

pub use matrix::{dot, rel_frobenius, Matrix};
pub use svd::{jacobi_svd, pinv, pinv_from_svd, ulp_spacing, Pinv, PinvConfig, RankStatus, SvdResult};
