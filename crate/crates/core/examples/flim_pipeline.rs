//! Lifetime regression on synthetic fluorescence decays: 250 samples of
//! initial training, 7750 streamed updates, then inference on held-out
//! decays. Progress lines go to standard error.
//!
//! ```text
//! cargo run --release --example flim_pipeline [hidden] [seed]
//! ```

use std::time::Instant;

use osos_elm::metrics::compute_metrics;
use osos_elm::pipeline::{run_it, run_stream, ItSchedule, Probe, StderrProgress};
use osos_elm::synth::{generate, generate_range, split, DatasetSpec, TaskKind};
use osos_elm::{Batch, ElmModel, PinvConfig, Topology};

fn main() -> osos_elm::Result<()> {
    let mut args = std::env::args().skip(1);
    let hidden: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(150);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);

    let spec = DatasetSpec::default_for(TaskKind::Flim);
    let train = generate(&spec, 8000, seed)?;
    let test = generate_range(&spec, 8000, 2000, seed)?;
    let probe_set = generate_range(&spec, 10_000, 200, seed)?;
    let probe_batch = Batch::new(probe_set.x, probe_set.y)?;

    let model = ElmModel::init(Topology::new(spec.n_in(), hidden, spec.n_out())?, seed);
    let (init, stream) = split(&train, 250)?;

    let t = Instant::now();
    let (mut state, diag) = run_it(&model, &init, ItSchedule::Sequential, &PinvConfig::default())?;
    println!("initial training {:.1} ms, P rank {}/{hidden}, {} sweeps", t.elapsed().as_secs_f64() * 1e3, diag.p_rank, diag.p_sweeps);

    let t = Instant::now();
    let probe = Probe {
        batch: Some(&probe_batch),
        every: 1000,
    };
    run_stream(&mut state, &model, &stream, probe, &mut StderrProgress)?;
    let obt = t.elapsed().as_secs_f64();
    println!("{} updates in {obt:.2} s ({:.1} us each)", stream.len(), obt / stream.len() as f64 * 1e6);

    let pred = model.infer(&test.x, &state.eta)?;
    let report = compute_metrics(&pred, &test.y, test.task())?;
    println!("test MAE  tau_A {:.4} ns  tau_I {:.4} ns", report.mae[0], report.mae[1]);
    println!("test MSE  tau_A {:.5}     tau_I {:.5}", report.mse[0], report.mse[1]);
    Ok(())
}
