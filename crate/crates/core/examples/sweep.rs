//! Cartesian sweep over hidden width, initial batch size and update batch
//! size. Metrics go to standard output as CSV, wall-times to standard error.
//!
//! ```text
//! cargo run --release --example sweep -- [workers]
//! ```

use osos_elm::pipeline::{run_sweep, RunConfig};
use osos_elm::synth::{DatasetSpec, TaskKind};

fn main() -> osos_elm::Result<()> {
    let workers = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let mut cfg = RunConfig::new(DatasetSpec::default_for(TaskKind::Flim));
    cfg.hidden = vec![50, 100, 150];
    cfg.n_init = vec![150, 250];
    cfg.batch_size = vec![1, 25];
    cfg.data_seed = 7;
    cfg.model_seed = 7;
    cfg.workers = workers;

    let report = run_sweep(&cfg)?;
    eprint!("{}", report.timing_csv());
    print!("{}", report.to_csv());
    Ok(())
}
