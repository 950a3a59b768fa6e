//! `elastica` command-line driver.
//!
//! Exit codes: 0 converged (or success), 2 time limit, 3 step failure,
//! 4 insufficient Lojasiewicz tail, 64 usage, 65 bad input data, 66 missing
//! input, 70 internal, 73 cannot write output.

mod config;
mod manifest;
mod plot;

use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use elastica::diagnostics::{
    classify_limit, fit_lojasiewicz, invariance_audit_seeded, STATIONARITY_THRESHOLD,
};
use elastica::flow::{read_jsonl, stability_scan, write_jsonl, Terminal, Trajectory};
use elastica::{make_curve, run_flow, Backend, ClosedCurve, EnergyParams, Error, Shape};

use config::{ConfigFile, IntegratorKind};
use manifest::RunManifest;

const EXIT_TIME_LIMIT: u8 = 2;
const EXIT_STEP_FAILURE: u8 = 3;
const EXIT_INSUFFICIENT_TAIL: u8 = 4;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_NO_INPUT: u8 = 66;
const EXIT_INTERNAL: u8 = 70;
const EXIT_CANT_CREATE: u8 = 73;

const TRAJECTORY_FILE: &str = "trajectory.jsonl";
const FINAL_CURVE_FILE: &str = "final.curve";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("cannot read {path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn input(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn output(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parse(_) => EXIT_DATA,
            CliError::Input { .. } => EXIT_NO_INPUT,
            CliError::Output { .. } => EXIT_CANT_CREATE,
            CliError::Internal(_) => EXIT_INTERNAL,
            CliError::Core(e) => match e {
                Error::InvalidParameter(_)
                | Error::CurveGeneration { .. }
                | Error::DiffeoGeneration { .. } => EXIT_USAGE,
                Error::Parse(_)
                | Error::NonImmersed { .. }
                | Error::LengthMismatch { .. }
                | Error::DimensionMismatch { .. } => EXIT_DATA,
                Error::InsufficientTail { .. } => EXIT_INSUFFICIENT_TAIL,
                _ => EXIT_INTERNAL,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "elastica",
    version,
    about = "H2(ds) gradient flow of the modified elastic energy of closed curves"
)]
struct Cli {
    /// Seed for every random choice (Fourier fixtures, diffeomorphisms).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Curve fixtures.
    #[command(subcommand)]
    Curve(CurveCommand),
    /// Flow runs and stability comparisons.
    #[command(subcommand)]
    Flow(FlowCommand),
    /// Convergence diagnostics.
    #[command(subcommand)]
    Diag(DiagCommand),
    /// Plot data from a run directory.
    #[command(subcommand)]
    Plot(PlotCommand),
}

#[derive(Subcommand, Debug)]
enum CurveCommand {
    /// Sample a fixture curve and write it as a curve document.
    Make(MakeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShapeKind {
    Circle,
    Ellipse,
    FigureEight,
    Fourier,
}

#[derive(Args, Debug)]
struct MakeArgs {
    #[arg(long, value_enum)]
    shape: ShapeKind,
    /// Circle radius.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Number of times the circle is traversed.
    #[arg(long, default_value_t = 1)]
    fold: u32,
    /// Ellipse semi-axes.
    #[arg(long, default_value_t = 1.3)]
    a: f64,
    #[arg(long, default_value_t = 0.7)]
    b: f64,
    /// Lemniscate scale.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Spectral decay rate of the Fourier fixture.
    #[arg(long, default_value_t = 1.0)]
    decay: f64,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum FlowCommand {
    /// Run the H2(ds) flow from a curve file.
    Run(RunArgs),
    /// Fixed-step survival of the H2(ds) and L2(ds) flows for a list of steps.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct FlowFlags {
    /// TOML file with flow settings; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long, value_enum)]
    integrator: Option<IntegratorKind>,
    /// Fixed step; implies `--integrator rk4` unless set otherwise.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    dt_min: Option<f64>,
    #[arg(long)]
    dt_max: Option<f64>,
    /// Stop once the H2(ds) gradient norm is below this.
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    snapshot_stride: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
}

impl FlowFlags {
    fn as_config(&self) -> ConfigFile {
        ConfigFile {
            lambda: self.lambda,
            backend: self.backend,
            integrator: self.integrator,
            dt: self.dt,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            dt_min: self.dt_min,
            dt_max: self.dt_max,
            grad_tol: self.grad_tol,
            t_max: self.t_max,
            snapshot_stride: self.snapshot_stride,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory; defaults to `$ELASTICA_OUT/<input stem>`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Root for default output directories.
    #[arg(long, env = "ELASTICA_OUT", default_value = "runs")]
    out_root: PathBuf,
    #[command(flatten)]
    flow: FlowFlags,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, default_value = "weak")]
    backend: Backend,
    /// Step sizes to probe, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    dt: Vec<f64>,
    /// Number of fixed steps a stable run must survive.
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum DiagCommand {
    /// Fit the Lojasiewicz exponent on the tail of a converged run.
    Lojasiewicz(LojasiewiczArgs),
    /// Classify a (limit) curve.
    Classify(ClassifyArgs),
    /// Translation and reparametrisation invariance of E and the gradient norm.
    Invariance(InvarianceArgs),
}

#[derive(Args, Debug)]
struct LojasiewiczArgs {
    /// Run directory or trajectory stream.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, default_value_t = STATIONARITY_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InvarianceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, default_value = "weak")]
    backend: Backend,
    /// Translation vector, comma separated; zero when absent.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    translate: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum PlotCommand {
    /// Write series.csv, snapshots.svg and energy.svg for a run.
    Emit(EmitArgs),
}

#[derive(Args, Debug)]
struct EmitArgs {
    #[arg(long)]
    run: PathBuf,
    /// Defaults to the run directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn load_curve(path: &Path) -> Result<ClosedCurve, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    ClosedCurve::from_json(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn load_trajectory(run: &Path) -> Result<Trajectory, CliError> {
    let path = if run.is_dir() {
        run.join(TRAJECTORY_FILE)
    } else {
        run.to_path_buf()
    };
    let file = std::fs::File::open(&path).map_err(|e| CliError::input(&path, e))?;
    read_jsonl(BufReader::new(file))
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

/// Writes `value` as pretty JSON to `out`, or to stdout.
fn emit_report(value: &impl serde::Serialize, out: Option<&Path>) -> Result<(), CliError> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| CliError::output(path, e)),
        None => stdout_line(&text),
    }
}

/// Prints one line to stdout; a closed pipe is not an error.
fn stdout_line(text: &str) -> Result<(), CliError> {
    use std::io::Write as _;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::output(Path::new("<stdout>"), e))
        }
        _ => Ok(()),
    }
}

fn curve_make(args: &MakeArgs, seed: u64) -> Result<u8, CliError> {
    let shape = match args.shape {
        ShapeKind::Circle => Shape::Circle {
            r: args.r,
            fold: args.fold,
        },
        ShapeKind::Ellipse => Shape::Ellipse {
            a: args.a,
            b: args.b,
        },
        ShapeKind::FigureEight => Shape::FigureEight { scale: args.scale },
        ShapeKind::Fourier => Shape::FourierRandom {
            seed,
            decay: args.decay,
        },
    };
    let curve = make_curve(shape, args.n, args.dim)?;
    let text = curve.to_json()?;
    std::fs::write(&args.out, text).map_err(|e| CliError::output(&args.out, e))?;
    Ok(0)
}

fn flow_run(args: &RunArgs) -> Result<u8, CliError> {
    let flags = args.flow.as_config();
    let file = match &args.flow.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let config = file.overlay(flags).resolve()?;
    let curve = load_curve(&args.input)?;
    let out_dir = match &args.out_dir {
        Some(d) => d.clone(),
        None => {
            let stem = args
                .input
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("run");
            args.out_root.join(stem)
        }
    };
    create_dir(&out_dir)?;

    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let traj = run_flow(&curve, &config)?;
    let wall_seconds = clock.elapsed().as_secs_f64();

    let stream_path = out_dir.join(TRAJECTORY_FILE);
    let file =
        std::fs::File::create(&stream_path).map_err(|e| CliError::output(&stream_path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    write_jsonl(&traj, &mut writer).map_err(|e| CliError::output(&stream_path, e))?;
    writer
        .flush()
        .map_err(|e| CliError::output(&stream_path, e))?;
    let final_path = out_dir.join(FINAL_CURVE_FILE);
    std::fs::write(&final_path, traj.final_curve.to_json()?)
        .map_err(|e| CliError::output(&final_path, e))?;

    let last = *traj
        .records
        .last()
        .expect("trajectory has an initial record");
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: std::env::args().collect(),
        config,
        input: args.input.clone(),
        outputs: vec![stream_path, final_path],
        started_unix,
        wall_seconds,
        accepted_steps: traj.accepted_steps(),
        rejected_steps: traj.rejected_steps,
        final_energy: last.energy,
        final_grad_norm: last.grad_norm,
        terminal: traj.terminal.clone(),
    };
    manifest.write(&out_dir)?;

    stdout_line(&format!(
        "{} after {} steps ({} rejected) at t = {:.6}: E = {:.12}, ||grad|| = {:.3e}; output in {}",
        traj.terminal,
        traj.accepted_steps(),
        traj.rejected_steps,
        last.t,
        last.energy,
        last.grad_norm,
        out_dir.display()
    ))?;
    Ok(match traj.terminal {
        Terminal::Converged => 0,
        Terminal::TimeLimit => EXIT_TIME_LIMIT,
        Terminal::StepFailure { .. } => EXIT_STEP_FAILURE,
    })
}

fn flow_compare(args: &CompareArgs) -> Result<u8, CliError> {
    let curve = load_curve(&args.input)?;
    let params = EnergyParams::new(args.lambda)?;
    if args.budget == 0 || args.dt.iter().any(|dt| dt.is_nan() || *dt <= 0.0) {
        return Err(CliError::Usage("steps and budget must be positive".into()));
    }
    let rows = stability_scan(&curve, &params, &args.dt, args.budget, args.backend);
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(std::fs::File::create(path).map_err(|e| CliError::output(path, e))?),
        None => Box::new(std::io::stdout()),
    };
    let target = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("<stdout>"));
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["method", "N", "dt", "survived", "budget", "final_energy"])
        .map_err(|e| CliError::output(&target, e))?;
    for r in &rows {
        w.serialize((&r.method, r.n, r.dt, r.survived, r.budget, r.final_energy))
            .map_err(|e| CliError::output(&target, e))?;
    }
    w.flush().map_err(|e| CliError::output(&target, e))?;
    Ok(0)
}

fn diag_lojasiewicz(args: &LojasiewiczArgs) -> Result<u8, CliError> {
    let traj = load_trajectory(&args.run)?;
    match fit_lojasiewicz(&traj) {
        Ok(fit) => {
            if !fit.reliable {
                eprintln!(
                    "warning: fit residual {:.3} is above the reliability limit",
                    fit.residual
                );
            }
            emit_report(&fit, args.out.as_deref())?;
            Ok(0)
        }
        Err(e @ Error::InsufficientTail { .. }) => {
            eprintln!("warning: {e}");
            Ok(EXIT_INSUFFICIENT_TAIL)
        }
        Err(e) => Err(e.into()),
    }
}

fn diag_classify(args: &ClassifyArgs) -> Result<u8, CliError> {
    let curve = load_curve(&args.input)?;
    let report = classify_limit(&curve, &EnergyParams::new(args.lambda)?, args.threshold)?;
    emit_report(&report, args.out.as_deref())?;
    Ok(0)
}

fn diag_invariance(args: &InvarianceArgs, seed: u64) -> Result<u8, CliError> {
    let curve = load_curve(&args.input)?;
    let shift = if args.translate.is_empty() {
        vec![0.0; curve.dim()]
    } else {
        args.translate.clone()
    };
    if shift.len() != curve.dim() {
        return Err(CliError::Usage(format!(
            "--translate has {} components, curve dimension is {}",
            shift.len(),
            curve.dim()
        )));
    }
    let report = invariance_audit_seeded(
        &curve,
        &EnergyParams::new(args.lambda)?,
        args.backend,
        seed,
        &shift,
    )?;
    emit_report(&report, args.out.as_deref())?;
    Ok(0)
}

fn plot_emit(args: &EmitArgs) -> Result<u8, CliError> {
    let traj = load_trajectory(&args.run)?;
    let out_dir = match &args.out_dir {
        Some(d) => d.clone(),
        None if args.run.is_dir() => args.run.clone(),
        None => args
            .run
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    create_dir(&out_dir)?;
    plot::write_series(&traj, &out_dir.join("series.csv"))?;
    let mut curves = Vec::with_capacity(traj.snapshots.len() + 1);
    for s in &traj.snapshots {
        curves.push((s.t, ClosedCurve::from_document(&s.curve)?));
    }
    let label = match RunManifest::read(&args.run) {
        Ok(m) => format!("(lambda = {}, {})", m.config.lambda, m.terminal),
        Err(_) => String::new(),
    };
    let t_end = traj.records.last().map_or(0.0, |r| r.t);
    curves.push((t_end, traj.final_curve.clone()));
    for (name, svg) in [
        ("snapshots.svg", plot::snapshots_svg(&curves)),
        ("energy.svg", plot::energy_svg(&traj, &label)),
    ] {
        let path = out_dir.join(name);
        std::fs::write(&path, svg).map_err(|e| CliError::output(&path, e))?;
    }
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Curve(CurveCommand::Make(a)) => curve_make(a, cli.seed),
        Command::Flow(FlowCommand::Run(a)) => flow_run(a),
        Command::Flow(FlowCommand::Compare(a)) => flow_compare(a),
        Command::Diag(DiagCommand::Lojasiewicz(a)) => diag_lojasiewicz(a),
        Command::Diag(DiagCommand::Classify(a)) => diag_classify(a),
        Command::Diag(DiagCommand::Invariance(a)) => diag_invariance(a, cli.seed),
        Command::Plot(PlotCommand::Emit(a)) => plot_emit(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
