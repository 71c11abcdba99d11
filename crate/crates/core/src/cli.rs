//! Command-line front end.
//!
//! Every flag has a config-file key of the same name (dashes or
//! underscores); `--config FILE` loads those keys first and flags override
//! them. Exit status is 0 on success, 1 for usage and input errors and 2 for
//! numeric failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::config::Settings;
use crate::elm::io::{load_model, save_model, save_state};
use crate::elm::{check_init_size, ElmModel, Topology};
use crate::error::{Error, Result};
use crate::fxp::{sweep_frac_bits, FxpStudyConfig};
use crate::linalg::io::{load_matrix, save_matrix};
use crate::linalg::{Matrix, PinvConfig};
use crate::metrics::compute_metrics;
use crate::pipeline::{run_it, run_stream, run_sweep, ItSchedule, Probe, RunConfig, RunMode, Silent, StderrProgress, DEFAULT_PROBE_EVERY};
use crate::synth::{dataset_csv, dataset_paths, generate, load_dataset, save_dataset, split, DatasetSpec, Task, TaskKind};

pub const SEED_ENV: &str = "OSOS_SEED";

#[derive(Debug, Parser)]
#[command(name = "osos", about = "Online sequential ELM toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Initial training followed by sequential updates over a dataset.
    Train(TrainArgs),
    /// Predict with a saved model.
    Infer(InferArgs),
    /// Cartesian hyper-parameter sweep.
    Sweep(SweepArgs),
    /// Fixed-point fractional-bit study.
    FxpSweep(FxpArgs),
    /// Score predictions against targets.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// flim, dcs or fog
    kind: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix for `.x.osem`, `.y.osem` and `.meta`; defaults to the
    /// dataset kind.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generator parameter, `key=value`; repeatable.
    #[arg(long = "param", short = 'p')]
    params: Vec<String>,
    /// Also write `<out>.csv`.
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Jacobi sweep cap.
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[arg(long)]
    state_out: Option<PathBuf>,
    /// Weight-initialisation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// sequential or two-task
    #[arg(long)]
    schedule: Option<String>,
    /// Held-out dataset prefix scored during streaming.
    #[arg(long)]
    probe: Option<PathBuf>,
    #[arg(long)]
    probe_every: Option<usize>,
    /// Print progress lines to standard error.
    #[arg(long)]
    progress: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InferArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Metrics CSV; standard output when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Predictions as a binary matrix.
    #[arg(long)]
    pred_out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kind: Option<String>,
    /// Comma-separated hidden widths.
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    n_init: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    max_sweeps: Option<String>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    model_seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    schedule: Option<String>,
    /// train or train-then-infer
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timing_out: Option<PathBuf>,
    #[arg(long = "param", short = 'p')]
    params: Vec<String>,
}

#[derive(Debug, Args)]
struct FxpArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// Evaluation dataset prefix; the training data is scored when absent.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Comma-separated fractional bit counts.
    #[arg(long)]
    frac_bits: Option<String>,
    #[arg(long)]
    int_bits: Option<u32>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Binary prediction matrix.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Dataset prefix or binary target matrix.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// regression or classification; taken from the dataset when omitted.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl FromStr for ItSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "sequential" | "seq" => Ok(ItSchedule::Sequential),
            "two-task" | "twotask" => Ok(ItSchedule::TwoTask),
            _ => Err(Error::InvalidSpec(format!("unknown schedule `{s}`"))),
        }
    }
}

impl FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "train" => Ok(RunMode::Train),
            "infer" => Ok(RunMode::Infer),
            "train-then-infer" => Ok(RunMode::TrainThenInfer),
            _ => Err(Error::InvalidSpec(format!("unknown mode `{s}`"))),
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Task::Regression),
            "classification" => Ok(Task::Classification),
            _ => Err(Error::InvalidSpec(format!("unknown task `{s}`"))),
        }
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numeric { .. } | Error::NumericAtSample { .. } | Error::TaskFailed { .. } => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::FxpSweep(a) => cmd_fxp(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn layered(config: Option<&Path>, flags: Settings) -> Result<Settings> {
    let mut s = match config {
        Some(p) => Settings::load(p)?,
        None => Settings::new(),
    };
    s.overlay(&flags);
    Ok(s)
}

fn add_params(flags: &mut Settings, params: &[String]) -> Result<()> {
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::InvalidSpec(format!("--param expects key=value, got `{p}`")))?;
        flags.set(k, v);
    }
    Ok(())
}

fn required<T: FromStr>(s: &Settings, key: &str) -> Result<T> {
    s.parsed(key)?
        .ok_or_else(|| Error::InvalidSpec(format!("missing required setting `{}`", key.replace('_', "-"))))
}

/// `seed` setting, then the environment fallback, then 1.
fn seed(s: &Settings, key: &str) -> Result<u64> {
    if let Some(v) = s.parsed(key)? {
        return Ok(v);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(1),
    }
}

fn reject_unused(s: &Settings) -> Result<()> {
    match s.unused().first() {
        Some((k, _)) => Err(Error::InvalidSpec(format!("unknown setting `{k}`"))),
        None => Ok(()),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn spec_from(s: &Settings, kind: TaskKind) -> Result<DatasetSpec> {
    let mut spec = DatasetSpec::default_for(kind);
    for (k, v) in s.unused() {
        spec.set(&k, &v)?;
    }
    spec.validate()?;
    Ok(spec)
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let mut flags = Settings::new();
    flags.set_opt("kind", a.kind);
    flags.set_opt("n", a.n);
    flags.set_opt("seed", a.seed);
    flags.set_opt("out", a.out.map(|p| p.display().to_string()));
    if a.csv {
        flags.set("csv", "true");
    }
    add_params(&mut flags, &a.params)?;
    let s = layered(a.config.as_deref(), flags)?;

    let kind: TaskKind = required(&s, "kind")?;
    let n: usize = s.parsed_or("n", 8000)?;
    let seed = seed(&s, "seed")?;
    let out: PathBuf = s.parsed_or("out", PathBuf::from(kind.to_string()))?;
    let csv: bool = s.parsed_or("csv", false)?;
    let spec = spec_from(&s, kind)?;

    let ds = generate(&spec, n, seed)?;
    save_dataset(&out, &ds)?;
    if csv {
        let mut p = out.as_os_str().to_owned();
        p.push(".csv");
        fs::write(PathBuf::from(p), dataset_csv(&ds))?;
    }
    info!("wrote {n} {kind} samples to {}", out.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut flags = Settings::new();
    flags.set_opt("data", a.data.map(|p| p.display().to_string()));
    flags.set_opt("n_init", a.n_init);
    flags.set_opt("hidden", a.hidden);
    flags.set_opt("sweeps", a.sweeps);
    flags.set_opt("model_out", a.model_out.map(|p| p.display().to_string()));
    flags.set_opt("state_out", a.state_out.map(|p| p.display().to_string()));
    flags.set_opt("seed", a.seed);
    flags.set_opt("schedule", a.schedule);
    flags.set_opt("probe", a.probe.map(|p| p.display().to_string()));
    flags.set_opt("probe_every", a.probe_every);
    if a.progress {
        flags.set("progress", "true");
    }
    let s = layered(a.config.as_deref(), flags)?;

    let n_init: usize = s.parsed_or("n_init", 250)?;
    let hidden: usize = s.parsed_or("hidden", 150)?;
    check_init_size(n_init, hidden)?;
    let pinv_cfg = PinvConfig::with_max_sweeps(s.parsed_or("sweeps", PinvConfig::default().max_sweeps)?);
    pinv_cfg.validate()?;
    let data: PathBuf = required(&s, "data")?;
    let model_out: PathBuf = s.parsed_or("model_out", PathBuf::from("model.osem"))?;
    let state_out: Option<PathBuf> = s.parsed("state_out")?;
    let seed = seed(&s, "seed")?;
    let schedule: ItSchedule = s.parsed_or("schedule", ItSchedule::Sequential)?;
    let probe_path: Option<PathBuf> = s.parsed("probe")?;
    let probe_every: usize = s.parsed_or("probe_every", DEFAULT_PROBE_EVERY)?;
    let progress: bool = s.parsed_or("progress", false)?;
    reject_unused(&s)?;

    let ds = load_dataset(&data)?;
    let topo = Topology::new(ds.x.cols(), hidden, ds.y.cols())?;
    let mut model = ElmModel::init(topo, seed);
    let (init, stream) = split(&ds, n_init)?;
    let (mut state, diag) = run_it(&model, &init, schedule, &pinv_cfg)?;
    info!("initial training: {diag:?}");

    let probe_ds = probe_path.map(load_dataset).transpose()?;
    let probe_batch = probe_ds.map(|p| split(&p, 0).map(|(_, b)| b)).transpose()?;
    let probe = Probe {
        batch: probe_batch.as_ref(),
        every: probe_every,
    };
    if progress {
        run_stream(&mut state, &model, &stream, probe, &mut StderrProgress)?;
    } else {
        run_stream(&mut state, &model, &stream, probe, &mut Silent)?;
    }
    model.set_eta(state.eta.clone())?;
    save_model(&model_out, &model, &state.p)?;
    if let Some(p) = state_out {
        save_state(p, &state)?;
    }
    info!("model written to {}", model_out.display());
    Ok(())
}

fn cmd_infer(a: InferArgs) -> Result<()> {
    let mut flags = Settings::new();
    flags.set_opt("model", a.model.map(|p| p.display().to_string()));
    flags.set_opt("data", a.data.map(|p| p.display().to_string()));
    flags.set_opt("report", a.report.map(|p| p.display().to_string()));
    flags.set_opt("pred_out", a.pred_out.map(|p| p.display().to_string()));
    let s = layered(a.config.as_deref(), flags)?;
    let model_path: PathBuf = required(&s, "model")?;
    let data: PathBuf = required(&s, "data")?;
    let report: Option<PathBuf> = s.parsed("report")?;
    let pred_out: Option<PathBuf> = s.parsed("pred_out")?;
    reject_unused(&s)?;

    let (model, _) = load_model(model_path)?;
    let ds = load_dataset(&data)?;
    let pred = model.predict(&ds.x)?;
    if let Some(p) = pred_out {
        save_matrix(p, &pred)?;
    }
    let metrics = compute_metrics(&pred, &ds.y, ds.task())?;
    write_output(report.as_deref(), &metrics.to_csv())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut flags = Settings::new();
    flags.set_opt("kind", a.kind);
    flags.set_opt("hidden", a.hidden);
    flags.set_opt("n_init", a.n_init);
    flags.set_opt("batch_size", a.batch_size);
    flags.set_opt("max_sweeps", a.max_sweeps);
    flags.set_opt("n_train", a.n_train);
    flags.set_opt("n_test", a.n_test);
    flags.set_opt("seed", a.seed);
    flags.set_opt("model_seed", a.model_seed);
    flags.set_opt("workers", a.workers);
    flags.set_opt("schedule", a.schedule);
    flags.set_opt("mode", a.mode);
    flags.set_opt("out", a.out.map(|p| p.display().to_string()));
    flags.set_opt("timing_out", a.timing_out.map(|p| p.display().to_string()));
    add_params(&mut flags, &a.params)?;
    let s = layered(a.config.as_deref(), flags)?;

    let kind: TaskKind = required(&s, "kind")?;
    let mut cfg = RunConfig::new(DatasetSpec::default_for(kind));
    if let Some(v) = s.list("hidden")? {
        cfg.hidden = v;
    }
    if let Some(v) = s.list("n_init")? {
        cfg.n_init = v;
    }
    if let Some(v) = s.list("batch_size")? {
        cfg.batch_size = v;
    }
    if let Some(v) = s.list("max_sweeps")? {
        cfg.max_sweeps = v;
    }
    cfg.n_train = s.parsed_or("n_train", cfg.n_train)?;
    cfg.n_test = s.parsed_or("n_test", cfg.n_test)?;
    cfg.data_seed = seed(&s, "seed")?;
    cfg.model_seed = s.parsed_or("model_seed", cfg.data_seed)?;
    cfg.workers = s.parsed_or("workers", cfg.workers)?;
    cfg.schedule = s.parsed_or("schedule", cfg.schedule)?;
    cfg.mode = s.parsed_or("mode", cfg.mode)?;
    let out: Option<PathBuf> = s.parsed("out")?;
    let timing_out: Option<PathBuf> = s.parsed("timing_out")?;
    cfg.dataset = spec_from(&s, kind)?;

    let report = run_sweep(&cfg)?;
    write_output(out.as_deref(), &report.to_csv())?;
    if let Some(p) = timing_out {
        fs::write(p, report.timing_csv())?;
    }
    Ok(())
}

fn cmd_fxp(a: FxpArgs) -> Result<()> {
    let mut flags = Settings::new();
    flags.set_opt("data", a.data.map(|p| p.display().to_string()));
    flags.set_opt("test", a.test.map(|p| p.display().to_string()));
    flags.set_opt("frac_bits", a.frac_bits);
    flags.set_opt("int_bits", a.int_bits);
    flags.set_opt("n_init", a.n_init);
    flags.set_opt("hidden", a.hidden);
    flags.set_opt("seed", a.seed);
    flags.set_opt("out", a.out.map(|p| p.display().to_string()));
    let s = layered(a.config.as_deref(), flags)?;

    let defaults = FxpStudyConfig::default();
    let cfg = FxpStudyConfig {
        int_bits: s.parsed_or("int_bits", defaults.int_bits)?,
        n_init: s.parsed_or("n_init", defaults.n_init)?,
        hidden: s.parsed_or("hidden", defaults.hidden)?,
        seed: seed(&s, "seed")?,
        pinv: defaults.pinv,
    };
    check_init_size(cfg.n_init, cfg.hidden)?;
    let data: PathBuf = required(&s, "data")?;
    let test: Option<PathBuf> = s.parsed("test")?;
    let frac: Vec<u32> = s.list("frac_bits")?.unwrap_or_else(|| vec![8, 12, 16, 20, 24, 28]);
    let out: Option<PathBuf> = s.parsed("out")?;
    reject_unused(&s)?;

    let train = load_dataset(&data)?;
    let eval = match test {
        Some(p) => load_dataset(p)?,
        None => train.clone(),
    };
    let sweep = sweep_frac_bits(&train, &eval, &frac, &cfg)?;
    write_output(out.as_deref(), &sweep.to_csv())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let mut flags = Settings::new();
    flags.set_opt("pred", a.pred.map(|p| p.display().to_string()));
    flags.set_opt("truth", a.truth.map(|p| p.display().to_string()));
    flags.set_opt("task", a.task);
    flags.set_opt("report", a.report.map(|p| p.display().to_string()));
    let s = layered(a.config.as_deref(), flags)?;
    let pred_path: PathBuf = required(&s, "pred")?;
    let truth_path: PathBuf = required(&s, "truth")?;
    let task: Option<Task> = s.parsed("task")?;
    let report: Option<PathBuf> = s.parsed("report")?;
    reject_unused(&s)?;

    let pred = load_matrix(pred_path)?;
    let (truth, task) = if dataset_paths(&truth_path).2.exists() {
        let ds = load_dataset(&truth_path)?;
        let task = task.unwrap_or(ds.task());
        (ds.y, task)
    } else {
        let m: Matrix = load_matrix(&truth_path)?;
        let task = task.ok_or_else(|| Error::InvalidSpec("--task is required when --truth is a bare matrix".into()))?;
        (m, task)
    };
    let metrics = compute_metrics(&pred, &truth, task)?;
    write_output(report.as_deref(), &metrics.to_csv())
}
