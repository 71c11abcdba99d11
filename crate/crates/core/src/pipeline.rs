//! Execution schedule: initial training on one or two worker tasks,
//! streaming sequential updates with progress reporting, and Cartesian
//! hyper-parameter sweeps on a bounded worker pool.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::Instant;

use crate::elm::{
    assemble_state, batch_update, check_init_size, covariance_inverse, obt_update, output_weights, Batch, ElmModel,
    ItDiagnostics, OnlineState, Topology,
};
use crate::error::{Error, ItStage, Result};
use crate::linalg::{Matrix, PinvConfig};
use crate::metrics::{compute_metrics, regression_errors, MetricsReport, Timings};
use crate::synth::{generate, generate_range, split, DatasetSpec, LabeledDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ItSchedule {
    #[default]
    Sequential,
    /// Task A computes `H₀`, hands it to task B once, then inverts `H₀ᵀH₀`
    /// while task B solves for `η₀`.
    TwoTask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    Train,
    Infer,
    #[default]
    TrainThenInfer,
}

/// Hook called at the start of every initial-training stage. Returning an
/// error aborts that stage.
pub type StageProbe<'a> = &'a (dyn Fn(ItStage) -> std::result::Result<(), String> + Sync);

fn no_probe(_: ItStage) -> std::result::Result<(), String> {
    Ok(())
}

fn in_stage<T>(stage: ItStage, probe: StageProbe<'_>, f: impl FnOnce() -> Result<T>) -> Result<T> {
    probe(stage).map_err(|reason| Error::TaskFailed { stage, reason })?;
    f().map_err(|e| match e {
        e @ Error::TaskFailed { .. } => e,
        e => Error::TaskFailed {
            stage,
            reason: e.to_string(),
        },
    })
}

fn check_batch(model: &ElmModel, batch: &Batch) -> Result<()> {
    let topo = model.topology();
    check_init_size(batch.len(), topo.n_hidden)?;
    if batch.x.cols() != topo.n_in || batch.y.cols() != topo.n_out {
        return Err(Error::dim("run_it", (batch.len(), topo.n_in + topo.n_out), (batch.len(), batch.x.cols() + batch.y.cols())));
    }
    Ok(())
}

/// Initial training under `schedule`. Both schedules run the same
/// arithmetic, so their results are bit-identical.
pub fn run_it(model: &ElmModel, batch: &Batch, schedule: ItSchedule, cfg: &PinvConfig) -> Result<(OnlineState, ItDiagnostics)> {
    run_it_with_probe(model, batch, schedule, cfg, &no_probe)
}

pub fn run_it_with_probe(
    model: &ElmModel,
    batch: &Batch,
    schedule: ItSchedule,
    cfg: &PinvConfig,
    probe: StageProbe<'_>,
) -> Result<(OnlineState, ItDiagnostics)> {
    check_batch(model, batch)?;
    cfg.validate()?;
    match schedule {
        ItSchedule::Sequential => {
            let h0 = in_stage(ItStage::Hidden, probe, || model.hidden_activations(&batch.x))?;
            let p = in_stage(ItStage::Covariance, probe, || covariance_inverse(&h0, cfg))?;
            let (eta, eta_pinv) = in_stage(ItStage::OutputWeights, probe, || output_weights(&h0, &batch.y, cfg))?;
            assemble_state(p, eta, &eta_pinv, batch.len())
        }
        ItSchedule::TwoTask => {
            let (a, b) = thread::scope(|s| {
                let (tx, rx) = mpsc::sync_channel::<Arc<Matrix>>(1);
                let task_b = s.spawn(move || {
                    let h0 = rx.recv().map_err(|_| Error::TaskFailed {
                        stage: ItStage::OutputWeights,
                        reason: "hidden activations were never handed over".into(),
                    })?;
                    in_stage(ItStage::OutputWeights, probe, || output_weights(&h0, &batch.y, cfg))
                });
                let task_a = s.spawn(move || {
                    let h0 = Arc::new(in_stage(ItStage::Hidden, probe, || model.hidden_activations(&batch.x))?);
                    // A dropped receiver means task B already failed; its
                    // error is reported at the join.
                    let _ = tx.send(Arc::clone(&h0));
                    in_stage(ItStage::Covariance, probe, || covariance_inverse(&h0, cfg))
                });
                (join(task_a, ItStage::Covariance), join(task_b, ItStage::OutputWeights))
            });
            let p = a?;
            let (eta, eta_pinv) = b?;
            assemble_state(p, eta, &eta_pinv, batch.len())
        }
    }
}

fn join<T>(handle: thread::ScopedJoinHandle<'_, Result<T>>, stage: ItStage) -> Result<T> {
    handle.join().unwrap_or_else(|_| {
        Err(Error::TaskFailed {
            stage,
            reason: "worker panicked".into(),
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub samples_seen: usize,
    /// Mean over outputs of the probe-set MAE, when a probe set is given.
    pub probe_mae: Option<f64>,
}

pub trait ProgressSink {
    fn report(&mut self, progress: Progress);
}

/// Discards progress.
#[derive(Debug, Default)]
pub struct Silent;

impl ProgressSink for Silent {
    fn report(&mut self, _: Progress) {}
}

/// Writes `sample=<n> probe_mae=<v>` lines to standard error.
#[derive(Debug, Default)]
pub struct StderrProgress;

impl ProgressSink for StderrProgress {
    fn report(&mut self, p: Progress) {
        match p.probe_mae {
            Some(v) => eprintln!("sample={} probe_mae={v}", p.samples_seen),
            None => eprintln!("sample={} probe_mae=na", p.samples_seen),
        }
    }
}

impl ProgressSink for Vec<Progress> {
    fn report(&mut self, p: Progress) {
        self.push(p);
    }
}

pub const DEFAULT_PROBE_EVERY: usize = 500;

/// Progress cadence and optional held-out rows scored at each report.
#[derive(Debug, Clone, Copy)]
pub struct Probe<'a> {
    pub batch: Option<&'a Batch>,
    pub every: usize,
}

impl Default for Probe<'_> {
    fn default() -> Self {
        Probe {
            batch: None,
            every: DEFAULT_PROBE_EVERY,
        }
    }
}

fn probe_mae(model: &ElmModel, state: &OnlineState, probe: &Probe<'_>) -> Result<Option<f64>> {
    let Some(batch) = probe.batch.filter(|b| !b.is_empty()) else { return Ok(None) };
    let pred = model.infer(&batch.x, &state.eta)?;
    let (mae, _) = regression_errors(&pred, &batch.y)?;
    Ok(Some(mae.iter().sum::<f64>() / mae.len() as f64))
}

/// Sequential updates over `stream` in order. Progress is reported every
/// `probe.every` samples and once at the end.
pub fn run_stream(
    state: &mut OnlineState,
    model: &ElmModel,
    stream: &Batch,
    probe: Probe<'_>,
    sink: &mut dyn ProgressSink,
) -> Result<()> {
    if stream.is_empty() {
        return Ok(());
    }
    let every = probe.every.max(1);
    for (i, (x, y)) in stream.samples().enumerate() {
        obt_update(state, model, x, y)?;
        if (i + 1) % every == 0 && i + 1 != stream.len() {
            sink.report(Progress {
                samples_seen: state.samples_seen,
                probe_mae: probe_mae(model, state, &probe)?,
            });
        }
    }
    sink.report(Progress {
        samples_seen: state.samples_seen,
        probe_mae: probe_mae(model, state, &probe)?,
    });
    Ok(())
}

/// Updates in chunks of `k` samples; the last chunk may be shorter. `k = 1`
/// uses the rank-one path.
pub fn run_stream_batched(state: &mut OnlineState, model: &ElmModel, stream: &Batch, k: usize, cfg: &PinvConfig) -> Result<()> {
    if k == 0 {
        return Err(Error::Range {
            what: "batch size",
            detail: "k must be at least 1".into(),
        });
    }
    if k == 1 {
        return run_stream(state, model, stream, Probe::default(), &mut Silent);
    }
    let mut start = 0;
    while start < stream.len() {
        let end = (start + k).min(stream.len());
        let chunk = Batch::new(stream.x.slice_rows(start, end), stream.y.slice_rows(start, end))?;
        batch_update(state, model, &chunk, cfg)?;
        start = end;
    }
    Ok(())
}

/// Cartesian sweep definition. Training uses samples `0..n_train` of the
/// dataset stream, evaluation the following `n_test`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub data_seed: u64,
    pub model_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub hidden: Vec<usize>,
    pub n_init: Vec<usize>,
    pub batch_size: Vec<usize>,
    pub max_sweeps: Vec<usize>,
    pub off_diag_tol: f64,
    pub schedule: ItSchedule,
    pub mode: RunMode,
    pub workers: usize,
}

impl RunConfig {
    pub fn new(dataset: DatasetSpec) -> Self {
        RunConfig {
            dataset,
            data_seed: 1,
            model_seed: 1,
            n_train: 8000,
            n_test: 2000,
            hidden: vec![150],
            n_init: vec![250],
            batch_size: vec![1],
            max_sweeps: vec![PinvConfig::default().max_sweeps],
            off_diag_tol: PinvConfig::default().off_diag_tol,
            schedule: ItSchedule::Sequential,
            mode: RunMode::TrainThenInfer,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        for (name, list) in [
            ("hidden", &self.hidden),
            ("n_init", &self.n_init),
            ("batch_size", &self.batch_size),
            ("max_sweeps", &self.max_sweeps),
        ] {
            if list.is_empty() {
                return Err(Error::InvalidSpec(format!("sweep axis `{name}` is empty")));
            }
        }
        if self.mode == RunMode::Infer {
            return Err(Error::InvalidSpec("a sweep trains every cell; mode=infer is not meaningful".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidSpec("workers must be >= 1".into()));
        }
        Ok(())
    }

    /// Cells in row-major order over `(hidden, n_init, batch_size, max_sweeps)`.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &hidden in &self.hidden {
            for &n_init in &self.n_init {
                for &batch_size in &self.batch_size {
                    for &max_sweeps in &self.max_sweeps {
                        out.push(SweepCell {
                            hidden,
                            n_init,
                            batch_size,
                            max_sweeps,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepCell {
    pub hidden: usize,
    pub n_init: usize,
    pub batch_size: usize,
    pub max_sweeps: usize,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: SweepCell,
    /// Error message of a failed cell.
    pub outcome: std::result::Result<MetricsReport, String>,
    pub timings: Timings,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub cells: Vec<CellResult>,
}

/// Train (and optionally evaluate) a single cell on pre-generated data.
pub fn run_cell(cfg: &RunConfig, cell: SweepCell, train: &LabeledDataset, test: Option<&LabeledDataset>) -> Result<(Option<MetricsReport>, Timings)> {
    let topo = Topology::new(train.x.cols(), cell.hidden, train.y.cols())?;
    check_init_size(cell.n_init, cell.hidden)?;
    let pinv_cfg = PinvConfig {
        max_sweeps: cell.max_sweeps,
        off_diag_tol: cfg.off_diag_tol,
    };
    let model = ElmModel::init(topo, cfg.model_seed);
    let (init, stream) = split(train, cell.n_init)?;

    let t0 = Instant::now();
    let (mut state, _) = run_it(&model, &init, cfg.schedule, &pinv_cfg)?;
    let it = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    run_stream_batched(&mut state, &model, &stream, cell.batch_size, &pinv_cfg)?;
    let obt_total = t1.elapsed().as_secs_f64();
    let mut timings = Timings {
        it,
        obt_total,
        obt_per_sample: if stream.is_empty() { 0.0 } else { obt_total / stream.len() as f64 },
        infer_per_sample: 0.0,
    };
    let Some(test) = test else { return Ok((None, timings)) };
    let t2 = Instant::now();
    let pred = model.infer(&test.x, &state.eta)?;
    timings.infer_per_sample = t2.elapsed().as_secs_f64() / test.len().max(1) as f64;
    let mut report = compute_metrics(&pred, &test.y, test.task())?;
    report.timings = Some(timings);
    Ok((Some(report), timings))
}

/// Runs every cell; failing cells are recorded and the sweep continues.
/// Results come back in cell order regardless of the worker count.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let train = generate(&cfg.dataset, cfg.n_train, cfg.data_seed)?;
    let test = match cfg.mode {
        RunMode::TrainThenInfer => Some(generate_range(&cfg.dataset, cfg.n_train, cfg.n_test, cfg.data_seed)?),
        _ => None,
    };
    let cells = cfg.cells();
    let slots: Mutex<Vec<Option<CellResult>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    let workers = cfg.workers.min(cells.len()).max(1);
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&cell) = cells.get(i) else { break };
                let result = match run_cell(cfg, cell, &train, test.as_ref()) {
                    Ok((report, timings)) => CellResult {
                        cell,
                        outcome: Ok(report.unwrap_or_else(|| empty_report(&train))),
                        timings,
                    },
                    Err(e) => {
                        log::warn!("sweep cell {cell:?} failed: {e}");
                        CellResult {
                            cell,
                            outcome: Err(e.to_string()),
                            timings: Timings::default(),
                        }
                    }
                };
                slots.lock().expect("collector lock")[i] = Some(result);
            });
        }
    });
    let cells = slots
        .into_inner()
        .expect("collector lock")
        .into_iter()
        .map(|r| r.expect("every cell visited"))
        .collect();
    Ok(SweepReport { cells })
}

fn empty_report(train: &LabeledDataset) -> MetricsReport {
    MetricsReport {
        task: train.task(),
        mae: Vec::new(),
        mse: Vec::new(),
        confusion: Vec::new(),
        auc: Vec::new(),
        accuracy: None,
        timings: None,
    }
}

impl SweepReport {
    /// Long-format metrics, one row per `(cell, metric, index)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("hidden,n_init,batch_size,max_sweeps,status,metric,index,value\n");
        for r in &self.cells {
            let c = r.cell;
            let key = format!("{},{},{},{}", c.hidden, c.n_init, c.batch_size, c.max_sweeps);
            match &r.outcome {
                Err(msg) => {
                    let _ = writeln!(out, "{key},error,message,all,\"{}\"", msg.replace('"', "'"));
                }
                Ok(m) => {
                    let _ = writeln!(out, "{key},ok,trained,all,1");
                    for (o, v) in m.mae.iter().enumerate() {
                        let _ = writeln!(out, "{key},ok,mae,{o},{v:?}");
                    }
                    for (o, v) in m.mse.iter().enumerate() {
                        let _ = writeln!(out, "{key},ok,mse,{o},{v:?}");
                    }
                    if let Some(a) = m.accuracy {
                        let _ = writeln!(out, "{key},ok,accuracy,all,{a:?}");
                    }
                    for (o, v) in m.auc.iter().enumerate() {
                        let _ = writeln!(out, "{key},ok,auc,{o},{v:?}");
                    }
                }
            }
        }
        out
    }

    /// Wall-times per cell, kept apart from the deterministic metrics file.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("hidden,n_init,batch_size,max_sweeps,it_s,obt_total_s,obt_per_sample_s,infer_per_sample_s\n");
        for r in &self.cells {
            let (c, t) = (r.cell, r.timings);
            let _ = writeln!(
                out,
                "{},{},{},{},{:?},{:?},{:?},{:?}",
                c.hidden, c.n_init, c.batch_size, c.max_sweeps, t.it, t.obt_total, t.obt_per_sample, t.infer_per_sample
            );
        }
        out
    }
}
