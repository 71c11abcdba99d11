//! Sequential versus two-task initial training: the two pseudo-inverses run
//! on separate threads after a single hand-off of the hidden activations.
//! Results are compared bit for bit.
//!
//! ```text
//! cargo run --release --example two_task_it
//! ```

use std::time::{Duration, Instant};

use osos_elm::pipeline::{run_it, ItSchedule};
use osos_elm::synth::{generate, DatasetSpec, TaskKind};
use osos_elm::{Batch, ElmModel, PinvConfig, Topology};

fn main() -> osos_elm::Result<()> {
    let spec = DatasetSpec::default_for(TaskKind::Flim);
    let cfg = PinvConfig::default();
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    println!("{cores} core(s) available");

    let (mut seq, mut two) = (Duration::ZERO, Duration::ZERO);
    for seed in 0..10 {
        let ds = generate(&spec, 250, seed)?;
        let batch = Batch::new(ds.x, ds.y)?;
        let model = ElmModel::init(Topology::new(256, 150, 2)?, seed);

        let t = Instant::now();
        let (a, _) = run_it(&model, &batch, ItSchedule::Sequential, &cfg)?;
        seq += t.elapsed();
        let t = Instant::now();
        let (b, _) = run_it(&model, &batch, ItSchedule::TwoTask, &cfg)?;
        two += t.elapsed();
        assert_eq!(a, b, "schedules diverged for seed {seed}");
    }
    println!("sequential {:.1} ms, two-task {:.1} ms per run", seq.as_secs_f64() * 100.0, two.as_secs_f64() * 100.0);
    println!("speedup {:.2}x, states bit-identical", seq.as_secs_f64() / two.as_secs_f64());
    Ok(())
}
