//! Blood-flow index and coherence factor regression from DCS autocorrelation
//! curves, streamed with several update batch sizes.
//!
//! ```text
//! cargo run --release --example dcs_pipeline
//! ```

use std::time::Instant;

use osos_elm::metrics::compute_metrics;
use osos_elm::pipeline::{run_it, run_stream_batched, ItSchedule};
use osos_elm::synth::{generate, generate_range, split, DatasetSpec, DcsSpec, TaskKind};
use osos_elm::{ElmModel, PinvConfig, Topology};

fn main() -> osos_elm::Result<()> {
    let spec = DatasetSpec::default_for(TaskKind::Dcs);
    let DatasetSpec::Dcs(dcs) = &spec else { unreachable!() };
    describe(dcs);

    let train = generate(&spec, 8000, 11)?;
    let test = generate_range(&spec, 8000, 2000, 11)?;
    let model = ElmModel::init(Topology::new(spec.n_in(), 150, 2)?, 11);
    let (init, stream) = split(&train, 250)?;
    let cfg = PinvConfig::default();
    let (state0, _) = run_it(&model, &init, ItSchedule::Sequential, &cfg)?;

    println!("{:>6} {:>10} {:>12} {:>12}", "batch", "obt_s", "mae_bfi", "mae_beta");
    for k in [1, 10, 50, 250] {
        let mut state = state0.clone();
        let t = Instant::now();
        run_stream_batched(&mut state, &model, &stream, k, &cfg)?;
        let secs = t.elapsed().as_secs_f64();
        let pred = model.infer(&test.x, &state.eta)?;
        let m = compute_metrics(&pred, &test.y, test.task())?;
        println!("{k:>6} {secs:>10.3} {:>12.5} {:>12.5}", m.mae[0], m.mae[1]);
    }
    Ok(())
}

fn describe(spec: &DcsSpec) {
    let lags = spec.lags();
    let (lo, hi) = spec.bfi_range;
    println!(
        "{} lags from {:.1e} s to {:.1e} s; BFi in [{lo:.1e}, {hi:.1e}] mm^2/s, reported in units of {:.0e}",
        lags.len(),
        lags[0],
        lags[lags.len() - 1],
        spec.bfi_label_unit
    );
    for bfi in [lo, hi] {
        let g2 = spec.g2_curve(bfi, 0.4);
        let half = spec.g1_curve(bfi).iter().position(|&g| g < 0.5).map(|k| lags[k]);
        println!("  BFi {bfi:.1e}: g2(first) {:.4}, g1 falls below 0.5 at {} s", g2[0], half.map_or("never".to_string(), |t| format!("{t:.2e}")));
    }
}
