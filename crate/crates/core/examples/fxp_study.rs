//! Fixed-point fractional-bit study: double-precision initial training,
//! then quantised streaming and inference for each width. Writes the sweep
//! CSV to standard output.
//!
//! ```text
//! cargo run --release --example fxp_study -- [flim|dcs|fog] [n]
//! ```

use osos_elm::fxp::{sweep_frac_bits, FxpStudyConfig};
use osos_elm::synth::{generate, generate_range, DatasetSpec, TaskKind};

fn main() -> osos_elm::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: TaskKind = args.next().as_deref().unwrap_or("dcs").parse()?;
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(8000);

    let spec = DatasetSpec::default_for(kind);
    let train = generate(&spec, n, 7)?;
    let test = generate_range(&spec, n, n / 4, 7)?;
    let cfg = FxpStudyConfig {
        seed: 7,
        ..Default::default()
    };
    let sweep = sweep_frac_bits(&train, &test, &[8, 12, 16, 20, 24, 28], &cfg)?;

    for row in &sweep.rows {
        let ratio: Vec<String> = row
            .eval
            .mse
            .iter()
            .zip(&sweep.baseline.mse)
            .map(|(q, b)| format!("{:.3e}", q / b))
            .collect();
        eprintln!(
            "frac={:>2}  mse/f64 [{}]  saturations {}",
            row.frac_bits,
            ratio.join(", "),
            row.saturation_events
        );
    }
    print!("{}", sweep.to_csv());
    Ok(())
}
