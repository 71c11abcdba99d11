//! Eight-class classification of fog-obscured return histograms for a range
//! of hidden widths, with the confusion matrix and per-class AUC of the
//! widest model.
//!
//! ```text
//! cargo run --release --example fog_classification
//! ```

use osos_elm::metrics::MetricsReport;
use osos_elm::pipeline::{run_cell, RunConfig, SweepCell};
use osos_elm::synth::{generate, generate_range, DatasetSpec, TaskKind};

fn main() -> osos_elm::Result<()> {
    let spec = DatasetSpec::default_for(TaskKind::Fog);
    let train = generate(&spec, 8000, 3)?;
    let test = generate_range(&spec, 8000, 2000, 3)?;
    let cfg = RunConfig::new(spec);

    let mut last: Option<MetricsReport> = None;
    for hidden in [25, 50, 100, 200, 400] {
        let cell = SweepCell {
            hidden,
            n_init: 500,
            batch_size: 1,
            max_sweeps: 15,
        };
        let (report, t) = run_cell(&cfg, cell, &train, Some(&test))?;
        let report = report.expect("test set given");
        println!(
            "L={hidden:>3}  accuracy {:.4}  train {:.2} s",
            report.accuracy.unwrap_or(f64::NAN),
            t.it + t.obt_total
        );
        last = Some(report);
    }

    let report = last.expect("at least one width");
    println!("\nconfusion (rows: true class)");
    for row in &report.confusion {
        let cells: Vec<String> = row.iter().map(|n| format!("{n:>4}")).collect();
        println!("  {}", cells.join(" "));
    }
    let auc: Vec<String> = report.auc.iter().map(|a| format!("{a:.3}")).collect();
    println!("AUC per class: {}", auc.join(" "));
    Ok(())
}
