//! One-sided Jacobi SVD and the truncated pseudo-inverse on a few small
//! matrices, including a rank-deficient one.
//!
//! ```text
//! cargo run --example jacobi_svd
//! ```

use osos_elm::linalg::{jacobi_svd, pinv, rel_frobenius};
use osos_elm::{Matrix, PinvConfig};

fn show(name: &str, a: &Matrix) -> osos_elm::Result<()> {
    let cfg = PinvConfig::default();
    let svd = jacobi_svd(a, &cfg)?;
    let recon = rel_frobenius(&svd.reconstruct(), a);
    let p = pinv(a, &cfg)?;
    // A X A should give A back even when columns were dropped.
    let axa = a.matmul(&p.matrix)?.matmul(a)?;
    println!("{name} ({}x{})", a.rows(), a.cols());
    println!("  singular values  {:?}", svd.s);
    println!("  sweeps used      {}", svd.sweeps_used);
    println!("  reconstruction   {recon:.2e}");
    println!(
        "  pinv rank {} ({:?}), tolerance {:.2e}, |AXA - A| {:.2e}",
        p.rank,
        p.status,
        p.tolerance,
        rel_frobenius(&axa, a)
    );
    Ok(())
}

fn main() -> osos_elm::Result<()> {
    show("tall", &Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])?)?;
    show("wide", &Matrix::from_rows(&[[2.0, 0.0, 1.0, -1.0], [0.5, 3.0, 0.0, 2.0]])?)?;
    // Third column is the sum of the first two.
    show(
        "dependent columns",
        &Matrix::from_rows(&[[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [2.0, 1.0, 3.0], [1.0, 1.0, 2.0]])?,
    )?;
    show("zero", &Matrix::zeros(3, 2))?;

    let hilbert = Matrix::from_fn(8, 8, |i, j| 1.0 / (i + j + 1) as f64);
    show("hilbert 8", &hilbert)?;
    Ok(())
}
