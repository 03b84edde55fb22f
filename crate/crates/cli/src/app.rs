//! Command definitions and their implementations.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use klap_core::benchmarks;
use klap_core::klap::{self, InitStrategy, KlapConfig, KlapResult};
use klap_core::lti::{self, PopovGrid, PopovScan};
use klap_core::passivity::{self, VerdictMethod};
use klap_core::StateSpaceSystem;
use nalgebra::DMatrix;

use crate::error::{CliError, EXIT_ERROR, EXIT_NOT_PASSIVE, EXIT_OK};
use crate::model;
use crate::report::{ConfigEcho, RunContext, RunReport};

#[derive(Debug, Parser)]
#[command(
    name = "klap",
    version,
    about = "H2-optimal passivity enforcement for LTI state-space models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a model for passivity (exit 0 passive, 1 not passive, 2 error).
    Check(CheckArgs),
    /// Replace C by the H2-nearest passive output matrix.
    Passivate(PassivateArgs),
    /// Sample the minimum eigenvalue of the Popov function as CSV.
    Popov(PopovArgs),
    /// H2 distance between two models.
    H2(H2Args),
    /// Run a bundled benchmark end to end.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Lowest frequency of a log grid (0 adds the point ω = 0).
    #[arg(long)]
    pub wmin: Option<f64>,
    /// Highest frequency of a log grid.
    #[arg(long)]
    pub wmax: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Worker threads for Popov scans.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

const DEFAULT_WMIN: f64 = 0.0;
const DEFAULT_WMAX: f64 = 1e4;
const DEFAULT_POINTS: usize = 501;

impl GridArgs {
    /// The default adaptive grid unless any of `--wmin/--wmax/--points` is given.
    pub fn grid(&self) -> Result<PopovGrid, CliError> {
        if self.wmin.is_none() && self.wmax.is_none() && self.points.is_none() {
            return Ok(PopovGrid::Default);
        }
        let wmin = self.wmin.unwrap_or(DEFAULT_WMIN);
        let wmax = self.wmax.unwrap_or(DEFAULT_WMAX);
        let points = self.points.unwrap_or(DEFAULT_POINTS);
        if points == 0 {
            return Err(CliError::Usage("--points must be positive".into()));
        }
        if !(wmin >= 0.0) || !wmax.is_finite() {
            return Err(CliError::Usage(format!("bad frequency range [{wmin}, {wmax}]")));
        }
        if points > 1 && wmin >= wmax {
            return Err(CliError::Usage(format!(
                "--wmin ({wmin}) must be below --wmax ({wmax})"
            )));
        }
        Ok(PopovGrid::Log { wmin, wmax, points })
    }

    fn threads(&self) -> Result<usize, CliError> {
        if self.threads == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        Ok(self.threads)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gradient-norm stopping tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
    /// Relative objective-change stopping tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub obj_tol: f64,
    /// Step length of the restart gradient step.
    #[arg(long, default_value_t = 1e-8)]
    pub alpha: f64,
    /// Imaginary-axis tolerance of the global-minimum certificate (default 1e-6·‖A‖_F).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Feedthrough margin of the Riccati initialization (default 1e-3·|λ_min|).
    #[arg(long)]
    pub init_margin: Option<f64>,
    /// Starting point: `are`, `random`, or comma-separated entries of L (row-major n×m).
    #[arg(long, default_value = "are", allow_hyphen_values = true)]
    pub init: String,
    #[arg(long, default_value_t = 50_000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub max_restarts: usize,
    /// Per-iteration CSV log (stage, iteration, objective, grad_norm).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

impl SolverArgs {
    fn init_strategy(&self, n: usize, m: usize) -> Result<InitStrategy, CliError> {
        match self.init.trim() {
            "are" => Ok(InitStrategy::Are),
            "random" => Ok(InitStrategy::Random),
            list => {
                let values = list
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Usage(format!("--init `{list}`: {e}")))?;
                if values.len() != n * m {
                    return Err(CliError::Usage(format!(
                        "--init has {} entries, expected n·m = {}",
                        values.len(),
                        n * m
                    )));
                }
                Ok(InitStrategy::Given(DMatrix::from_row_slice(n, m, &values)))
            }
        }
    }

    pub fn config(
        &self,
        sys: &StateSpaceSystem,
        grid: PopovGrid,
        threads: usize,
    ) -> Result<KlapConfig, CliError> {
        let config = KlapConfig {
            grad_tol: self.grad_tol,
            obj_rel_tol: self.obj_tol,
            restart_step: self.alpha,
            restart_axis_tol: self.eps,
            init_margin: self.init_margin,
            max_iterations: self.max_iterations,
            max_restarts: self.max_restarts,
            popov_grid: grid,
            rng_seed: self.seed,
            init: self.init_strategy(sys.n(), sys.m())?,
            threads,
            ..KlapConfig::default()
        };
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    pub model: PathBuf,
    /// Passivity tolerance (default 1e-8 times the model's scale).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also write the Popov scan as CSV.
    #[arg(long)]
    pub popov_csv: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PassivateArgs {
    pub model: PathBuf,
    /// Output model (`.json` for JSON, anything else for the text format).
    #[arg(long)]
    pub out: PathBuf,
    /// Report path (default `<out>.report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Replace D by this multiple of the identity before passivating.
    #[arg(long, allow_hyphen_values = true)]
    pub feedthrough: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PopovArgs {
    pub model: PathBuf,
    /// CSV destination (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Add this multiple of the identity to D.
    #[arg(long, allow_hyphen_values = true)]
    pub shift: Option<f64>,
    /// Replace D by this multiple of the identity.
    #[arg(long, allow_hyphen_values = true)]
    pub feedthrough: Option<f64>,
    /// Write every eigenvalue, not only the smallest.
    #[arg(long)]
    pub all_eigenvalues: bool,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct H2Args {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Allow differing A and B (frequency quadrature).
    #[arg(long)]
    pub general: bool,
    /// Quadrature points for `--general`.
    #[arg(long, default_value_t = 20_000)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchName {
    Acc,
    #[value(name = "toy-m0")]
    ToyM0,
    #[value(name = "toy-m1")]
    ToyM1,
}

impl BenchName {
    pub fn label(self) -> &'static str {
        match self {
            BenchName::Acc => "acc",
            BenchName::ToyM0 => "toy-m0",
            BenchName::ToyM1 => "toy-m1",
        }
    }

    pub fn system(self, feedthrough: Option<f64>) -> StateSpaceSystem {
        match self {
            BenchName::Acc => benchmarks::acc(feedthrough.unwrap_or(0.125)),
            BenchName::ToyM0 => benchmarks::toy(feedthrough.unwrap_or(0.0)),
            BenchName::ToyM1 => benchmarks::toy(feedthrough.unwrap_or(0.125)),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub name: BenchName,
    /// Scalar feedthrough (acc and toy-m1 default to 0.125, toy-m0 to 0).
    #[arg(long, allow_hyphen_values = true)]
    pub feedthrough: Option<f64>,
    /// Also write a JSON run report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    init_logging();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("KLAP_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

pub fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Check(args) => cmd_check(&args),
        Command::Passivate(args) => cmd_passivate(&args),
        Command::Popov(args) => cmd_popov(&args),
        Command::H2(args) => cmd_h2(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn model_err(path: &Path) -> impl Fn(klap_core::KlapError) -> CliError + '_ {
    move |source| CliError::Model {
        path: path.display().to_string(),
        source,
    }
}

fn method_name(method: VerdictMethod) -> &'static str {
    match method {
        VerdictMethod::Hamiltonian => "hamiltonian",
        VerdictMethod::PopovScan => "popov-scan",
        VerdictMethod::AreFeasibility => "are-feasibility",
    }
}

fn scan(sys: &StateSpaceSystem, grid: &PopovGrid, threads: usize) -> klap_core::Result<PopovScan> {
    let w = grid.frequencies(sys)?;
    sys.popov_scan_parallel(&w, threads)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_err(path: &str) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_string(),
        message: e.to_string(),
    }
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::io(path, e))
}

pub fn cmd_check(args: &CheckArgs) -> Result<i32, CliError> {
    let sys = model::load_model(&args.model)?;
    let grid = args.grid.grid()?;
    let threads = args.grid.threads()?;
    let tol = args
        .tol
        .unwrap_or_else(|| passivity::default_passivity_tolerance(&sys));
    let verdict = passivity::check_passive(&sys, tol).map_err(model_err(&args.model))?;

    println!("model: {}", args.model.display());
    println!("passive: {}", if verdict.passive { "yes" } else { "no" });
    println!("method: {}", method_name(verdict.method));
    println!("margin: {:.6e}", verdict.margin);
    println!("tolerance: {tol:.3e}");
    if !verdict.crossing_frequencies.is_empty() {
        let w: Vec<String> = verdict
            .crossing_frequencies
            .iter()
            .map(|w| format!("{w:.6e}"))
            .collect();
        println!("crossings: {}", w.join(", "));
    }

    if let Some(path) = &args.popov_csv {
        let s = scan(&sys, &grid, threads).map_err(model_err(&args.model))?;
        write_popov_csv(create(path)?, &sys, &s, false, &path.display().to_string())?;
    }
    Ok(if verdict.passive {
        EXIT_OK
    } else {
        EXIT_NOT_PASSIVE
    })
}

fn write_popov_csv<W: Write>(
    out: W,
    sys: &StateSpaceSystem,
    scan: &PopovScan,
    all: bool,
    label: &str,
) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    let mut header = vec!["omega".to_string(), "lambda_min".to_string()];
    if all {
        header.extend((1..=sys.m()).map(|k| format!("lambda_{k}")));
    }
    w.write_record(&header).map_err(csv_err(label))?;
    for (&omega, &lmin) in scan.frequencies.iter().zip(&scan.min_eigenvalues) {
        let mut row = vec![omega.to_string(), lmin.to_string()];
        if all {
            let phi = sys.popov_eval(omega)?;
            let mut eigs: Vec<f64> = phi.symmetric_eigenvalues().iter().copied().collect();
            eigs.sort_by(f64::total_cmp);
            row.extend(eigs.iter().map(|v| v.to_string()));
        }
        w.write_record(&row).map_err(csv_err(label))?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: label.to_string(),
        message: e.to_string(),
    })
}

pub fn cmd_popov(args: &PopovArgs) -> Result<i32, CliError> {
    let grid = args.grid.grid()?;
    let threads = args.grid.threads()?;
    let mut sys = model::load_model(&args.model)?;
    let m = sys.m();
    if let Some(f) = args.feedthrough {
        sys = sys
            .with_feedthrough(DMatrix::identity(m, m) * f)
            .map_err(model_err(&args.model))?;
    }
    if let Some(shift) = args.shift {
        sys = sys
            .with_feedthrough(sys.d() + DMatrix::identity(m, m) * shift)
            .map_err(model_err(&args.model))?;
    }
    let s = scan(&sys, &grid, threads).map_err(model_err(&args.model))?;
    match &args.out {
        Some(path) => write_popov_csv(
            create(path)?,
            &sys,
            &s,
            args.all_eigenvalues,
            &path.display().to_string(),
        )?,
        None => write_popov_csv(io::stdout().lock(), &sys, &s, args.all_eigenvalues, "stdout")?,
    }
    Ok(EXIT_OK)
}

fn matrices_match(x: &DMatrix<f64>, y: &DMatrix<f64>) -> bool {
    x.shape() == y.shape() && (x - y).amax() <= 1e-10 * x.amax().max(1.0)
}

pub fn cmd_h2(args: &H2Args) -> Result<i32, CliError> {
    let first = model::load_model(&args.first)?;
    let second = model::load_model(&args.second)?;
    if first.m() != second.m() {
        return Err(CliError::Usage(format!(
            "input dimensions differ ({} vs {})",
            first.m(),
            second.m()
        )));
    }
    if !matrices_match(first.d(), second.d()) {
        return Err(CliError::Usage(
            "D matrices differ; the H2 distance is infinite".into(),
        ));
    }
    let j = if args.general {
        lti::h2_distance_sq_quadrature(&first, &second, args.points)?
    } else {
        for (label, x, y) in [("A", first.a(), second.a()), ("B", first.b(), second.b())] {
            if !matrices_match(x, y) {
                return Err(CliError::Usage(format!(
                    "{label} matrices differ; pass --general for differing realizations"
                )));
            }
        }
        lti::h2_error_sq(&first, second.c()).map_err(model_err(&args.first))?
    };
    println!("h2_error_sq: {j:.12e}");
    println!("h2_error: {:.12e}", j.max(0.0).sqrt());
    Ok(EXIT_OK)
}

struct Run {
    result: KlapResult,
    output: StateSpaceSystem,
    report: RunReport,
}

fn passivate_system(
    sys: &StateSpaceSystem,
    config: &KlapConfig,
    input: String,
    output: Option<String>,
    feedthrough: Option<f64>,
    label: &Path,
) -> Result<Run, CliError> {
    let threads = config.threads;
    let before = scan(sys, &config.popov_grid, threads).map_err(model_err(label))?;
    let start = Instant::now();
    let result = klap::klap(sys, config).map_err(model_err(label))?;
    let seconds = start.elapsed().as_secs_f64();
    let out = sys.with_output(result.c_hat.clone()).map_err(model_err(label))?;
    let tol = passivity::default_passivity_tolerance(&out);
    let verdict = passivity::check_passive(&out, tol).map_err(model_err(label))?;
    let after = scan(&out, &config.popov_grid, threads).map_err(model_err(label))?;
    let ctx = RunContext {
        input,
        output,
        config: ConfigEcho::new(config, config.axis_tolerance(sys), feedthrough),
        popov_margin_before: before.global_min,
        popov_margin_after: after.global_min,
        tol_passive: tol,
        passive_after: verdict.passive,
        wall_clock_seconds: seconds,
    };
    let report = RunReport::new(&result, ctx);
    Ok(Run {
        result,
        output: out,
        report,
    })
}

fn write_trace(path: &Path, result: &KlapResult) -> Result<(), CliError> {
    let label = path.display().to_string();
    let mut w = csv_writer(create(path)?);
    w.write_record(["stage", "iteration", "objective", "grad_norm"])
        .map_err(csv_err(&label))?;
    for e in &result.trace {
        w.write_record([
            e.stage.to_string(),
            e.iteration.to_string(),
            e.objective.to_string(),
            e.grad_norm.to_string(),
        ])
        .map_err(csv_err(&label))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn default_report_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

fn apply_feedthrough(
    sys: StateSpaceSystem,
    f: Option<f64>,
    label: &Path,
) -> Result<StateSpaceSystem, CliError> {
    match f {
        Some(f) => {
            let m = sys.m();
            sys.with_feedthrough(DMatrix::identity(m, m) * f)
                .map_err(model_err(label))
        }
        None => Ok(sys),
    }
}

pub fn cmd_passivate(args: &PassivateArgs) -> Result<i32, CliError> {
    let grid = args.grid.grid()?;
    let threads = args.grid.threads()?;
    let (file, sys) = model::load_model_file(&args.model)?;
    let sys = apply_feedthrough(sys, args.feedthrough, &args.model)?;
    let config = args.solver.config(&sys, grid, threads)?;
    let run = passivate_system(
        &sys,
        &config,
        args.model.display().to_string(),
        Some(args.out.display().to_string()),
        args.feedthrough,
        &args.model,
    )?;

    let name = file.name.map(|n| format!("{n}-passive"));
    model::write_model(&args.out, &run.output, name)?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| default_report_path(&args.out));
    run.report.write(&report_path)?;
    if let Some(path) = &args.solver.trace {
        write_trace(path, &run.result)?;
    }

    let r = &run.report;
    println!("output: {}", args.out.display());
    println!("report: {}", report_path.display());
    println!("h2_error: {:.6e}", r.h2_error);
    println!("initial_h2_error: {:.6e}", r.initial_h2_error);
    println!("iterations: {}", r.iterations);
    println!("restarts: {}", r.restarts);
    println!("converged: {}", r.converged);
    println!("popov_margin_after: {:.6e}", r.popov_margin_after);

    if !r.passive_after {
        eprintln!(
            "error: passivated model failed the passivity check (margin {:.3e})",
            r.popov_margin_after
        );
        return Ok(EXIT_ERROR);
    }
    if !r.converged {
        eprintln!(
            "warning: optimizer stopped before convergence ({})",
            r.stop_reason
        );
    }
    Ok(EXIT_OK)
}

/// Same rule the restart loop uses: eigenvalues of `Y*` right of `ε` mark a local minimum.
fn certificate_status(result: &KlapResult, eps: f64) -> &'static str {
    let c = &result.certificate;
    if c.vacuous {
        "vacuous"
    } else if c.max_real > eps {
        "non-global"
    } else {
        "global"
    }
}

pub fn cmd_bench(args: &BenchArgs) -> Result<i32, CliError> {
    let grid = args.grid.grid()?;
    let threads = args.grid.threads()?;
    let label = args.name.label();
    let sys = args.name.system(args.feedthrough);
    let config = args.solver.config(&sys, grid, threads)?;
    let run = passivate_system(
        &sys,
        &config,
        format!("bench:{label}"),
        None,
        args.feedthrough,
        Path::new(label),
    )?;
    if let Some(path) = &args.report {
        run.report.write(path)?;
    }
    if let Some(path) = &args.solver.trace {
        write_trace(path, &run.result)?;
    }

    let r = &run.report;
    println!(
        "{:<8} {:>10} {:>12} {:>14} {:>12} {:>12} {:>8} {:>11}",
        "model", "iterations", "time (s)", "time/iter (s)", "H2-error", "J", "restarts", "certificate"
    );
    println!(
        "{:<8} {:>10} {:>12.3e} {:>14.3e} {:>12.5e} {:>12.5e} {:>8} {:>11}",
        label,
        r.iterations,
        r.wall_clock_seconds,
        r.time_per_iteration_seconds,
        r.h2_error,
        r.j_final,
        r.restarts,
        certificate_status(&run.result, r.config.eps)
    );
    let c: Vec<String> = run.result.c_hat.iter().map(|v| format!("{v:.6}")).collect();
    println!("c_hat: [{}]", c.join(", "));
    Ok(EXIT_OK)
}
