//! Stops a stream half way, writes the training state to disk, reloads it
//! and finishes. The result equals an uninterrupted run exactly.
//!
//! ```text
//! cargo run --release --example resume_stream
//! ```

use osos_elm::elm::io::{load_state, save_state};
use osos_elm::pipeline::{run_it, run_stream, ItSchedule, Probe, Silent};
use osos_elm::synth::{generate, split, DatasetSpec, TaskKind};
use osos_elm::{Batch, ElmModel, PinvConfig, Topology};

fn main() -> osos_elm::Result<()> {
    let spec = DatasetSpec::default_for(TaskKind::Dcs);
    let ds = generate(&spec, 4000, 5)?;
    let model = ElmModel::init(Topology::new(spec.n_in(), 100, spec.n_out())?, 5);
    let (init, stream) = split(&ds, 250)?;
    let (state0, _) = run_it(&model, &init, ItSchedule::Sequential, &PinvConfig::default())?;

    let mut whole = state0.clone();
    run_stream(&mut whole, &model, &stream, Probe::default(), &mut Silent)?;

    let cut = stream.len() / 2;
    let head = Batch::new(stream.x.slice_rows(0, cut), stream.y.slice_rows(0, cut))?;
    let tail = Batch::new(stream.x.slice_rows(cut, stream.len()), stream.y.slice_rows(cut, stream.len()))?;

    let path = std::env::temp_dir().join(format!("osos-resume-{}.state", std::process::id()));
    let mut first = state0;
    run_stream(&mut first, &model, &head, Probe::default(), &mut Silent)?;
    save_state(&path, &first)?;
    println!("saved state after {} samples to {}", first.samples_seen, path.display());

    let mut resumed = load_state(&path)?;
    run_stream(&mut resumed, &model, &tail, Probe::default(), &mut Silent)?;
    std::fs::remove_file(&path)?;

    println!("resumed run reached {} samples", resumed.samples_seen);
    println!("identical to uninterrupted run: {}", resumed == whole);
    Ok(())
}
