//! Initial training on a small block followed by one-sample updates, checked
//! against a least-squares fit of the whole data set in one go.
//!
//! ```text
//! cargo run --example online_training
//! ```

use osos_elm::elm::{initial_train, obt_update};
use osos_elm::linalg::{pinv, rel_frobenius};
use osos_elm::rng::stream_rng;
use osos_elm::{Batch, ElmModel, Matrix, PinvConfig, Topology};
use rand::Rng;

fn main() -> osos_elm::Result<()> {
    let (n, n_in, hidden, n_out, n_init) = (200, 8, 10, 2, 20);
    let mut rng = stream_rng(42, 0);
    let x = Matrix::from_fn(n, n_in, |_, _| rng.random_range(-1.0..1.0));
    // Smooth targets plus a little noise.
    let y = Matrix::from_fn(n, n_out, |i, o| {
        let r = x.row(i);
        let clean = if o == 0 { (r[0] * r[1]).sin() } else { r[2] - 0.5 * r[3] * r[3] };
        clean + 0.01 * rng.random_range(-1.0..1.0)
    });

    let model = ElmModel::init(Topology::new(n_in, hidden, n_out)?, 7);
    let init = Batch::new(x.slice_rows(0, n_init), y.slice_rows(0, n_init))?;
    let (mut state, diag) = initial_train(&model, &init, &PinvConfig::default())?;
    println!("initial training on {n_init} samples: {diag:?}");

    let h_all = model.hidden_activations(&x)?;
    let one_shot = pinv(&h_all, &PinvConfig::default())?.matrix.matmul(&y)?;
    for i in n_init..n {
        obt_update(&mut state, &model, x.row(i), y.row(i))?;
        if (i + 1) % 45 == 0 || i + 1 == n {
            println!(
                "after {:>3} samples: distance to one-shot solution {:.3e}",
                state.samples_seen,
                rel_frobenius(&state.eta, &one_shot)
            );
        }
    }
    let resid = h_all.matmul(&state.eta)?.sub(&y)?.frobenius_norm() / (n as f64).sqrt();
    println!("training RMS residual {resid:.4}");
    Ok(())
}
