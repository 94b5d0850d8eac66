//! `schedsim`: run scheduling simulations and parameter sweeps over job
//! traces, writing results as CSV.
//!
//! ```sh
//! $ schedsim sweep-sigma --synthetic n=5000,seed=1 --runs 100 --out sigma.csv
//! $ schedsim sweep-load --trace FB-2009.tsv --sigma 0.5 --out load.csv
//! ```

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use schedsim::errmodel::ErrorModelError;
use schedsim::experiment::{
    default_dn_grid, default_load_grid, default_sigma_grid, point_means, simulate_once, sweep, ExperimentConfig,
    ExperimentError, SweepAxis, Workload,
};
use schedsim::report::{write_atomically, write_job_dump, write_point_means, write_records};
use schedsim::trace::{
    calibrate, parse_sized, parse_swim, size_jobs, write_sized, write_swim, ColumnMap, ParseOptions, TimeUnit,
    TraceError,
};
use schedsim::{CalibrationConfig, RunResult, SchedulerKind, SyntheticSpec};

const EXIT_CONFIG: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_SIMULATION: u8 = 4;

#[derive(Parser, Debug)]
#[command(version, about = "Fluid simulator for size-based scheduling with inexact job sizes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run each scheduler once and print a summary row per scheduler
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Log-normal error parameter
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.9)]
        load: f64,
        #[arg(long, default_value_t = 4.0)]
        dn: f64,
        /// Also write per-job completion data here
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
    },
    /// Sweep the error parameter at fixed load and d/n
    SweepSigma {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        runs: RunArgs,
        /// Comma-separated sigma values [default: 0,0.25,0.5,0.75,1]
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 0.9)]
        load: f64,
        #[arg(long, default_value_t = 4.0)]
        dn: f64,
    },
    /// Sweep the load at fixed sigma and d/n
    SweepLoad {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        runs: RunArgs,
        /// Comma-separated loads [default: 0.1,0.2,...,2.0]
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        loads: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 4.0)]
        dn: f64,
    },
    /// Sweep the d/n ratio at fixed sigma and load
    SweepDn {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        runs: RunArgs,
        /// Comma-separated d/n values [default: 1,2,4,8,16]
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        dns: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.9)]
        load: f64,
    },
    /// Generate a synthetic workload
    GenTrace {
        /// e.g. `n=1000,rate=1,dist=pareto,shape=1.5,scale=1,seed=1`
        #[arg(long, value_name = "SPEC")]
        synthetic: SyntheticSpec,
        #[arg(long, value_enum, default_value_t = Format::Swim)]
        format: Format,
        /// Calibration used by the sized format
        #[arg(long, default_value_t = 0.9)]
        load: f64,
        #[arg(long, default_value_t = 4.0)]
        dn: f64,
        /// Output file [default: stdout]
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Byte-level trace: label, submit time, input, shuffle, output bytes
    Swim,
    /// Calibrated sizes: label, submit time, size
    Sized,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct InputArgs {
    /// Tab-separated byte-level trace
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Generate a synthetic byte-level trace instead of reading one
    #[arg(long, value_name = "SPEC")]
    synthetic: Option<SyntheticSpec>,
    /// Pre-sized workload as written by `gen-trace --format sized`
    #[arg(long, value_name = "PATH")]
    workload: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Comma-separated scheduler names
    #[arg(
        long,
        value_delimiter = ',',
        value_name = "LIST",
        default_value = "FIFO,PS,LAS,SRPT,FSP+FIFO,FSP+PS"
    )]
    schedulers: Vec<SchedulerKind>,
    /// Trace column indices as `label,submit,input,shuffle,output`; `-` for no label
    #[arg(long, value_name = "MAP", default_value = "0,1,2,3,4")]
    columns: ColumnMap,
    /// Unit of trace submit times: s or ms
    #[arg(long, value_name = "UNIT", default_value = "s")]
    time_unit: TimeUnit,
    /// Base random seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output CSV [default: stdout]
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Runs per grid point
    #[arg(long, default_value_t = 100)]
    runs: u32,
    /// Worker threads [default: number of CPUs]
    #[arg(long = "jobs", value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn input(path: &Path, err: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: format!("{}: {err}", path.display()),
        }
    }

    fn output(err: io::Error) -> Self {
        Failure {
            code: EXIT_SIMULATION,
            message: format!("writing output: {err}"),
        }
    }
}

fn trace_exit_code(err: &TraceError) -> u8 {
    match err {
        TraceError::InvalidConfig(_) | TraceError::InvalidParams(_) | TraceError::InvalidColumnMap(_) => EXIT_CONFIG,
        _ => EXIT_INPUT,
    }
}

impl From<ExperimentError> for Failure {
    fn from(err: ExperimentError) -> Self {
        let code = match &err {
            ExperimentError::Config(_) => EXIT_CONFIG,
            ExperimentError::Trace(e) => trace_exit_code(e),
            ExperimentError::ErrorModel(ErrorModelError::InvalidSigma(_)) => EXIT_CONFIG,
            ExperimentError::ErrorModel(_) => EXIT_INPUT,
            ExperimentError::Engine(_) | ExperimentError::Metrics(_) => EXIT_SIMULATION,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl From<TraceError> for Failure {
    fn from(err: TraceError) -> Self {
        Failure {
            code: trace_exit_code(&err),
            message: err.to_string(),
        }
    }
}

fn load_workload(input: &InputArgs, common: &CommonArgs) -> Result<Workload, Failure> {
    let open = |path: &Path| {
        File::open(path)
            .map(BufReader::new)
            .map_err(|e| Failure::input(path, e))
    };
    if let Some(path) = &input.trace {
        let opts = ParseOptions {
            columns: common.columns,
            time_unit: common.time_unit,
        };
        let jobs = parse_swim(open(path)?, &opts).map_err(|e| Failure::input(path, e))?;
        return Ok(Workload::Trace(jobs));
    }
    if let Some(path) = &input.workload {
        let jobs = parse_sized(open(path)?).map_err(|e| Failure::input(path, e))?;
        return Ok(Workload::Sized(jobs));
    }
    let spec = input.synthetic.as_ref().expect("clap requires one input");
    Ok(Workload::Trace(schedsim::synthetic_trace(spec)?))
}

/// Writes to `path` atomically, or to stdout when no path is given.
fn emit<F>(path: Option<&Path>, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => write_atomically(p, write),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).and_then(|_| lock.flush())
        }
    }
    .map_err(Failure::output)
}

fn means_path(out: &Path) -> PathBuf {
    out.with_extension("means.csv")
}

fn run_sweep(
    axis: SweepAxis,
    input: &InputArgs,
    common: &CommonArgs,
    runs: &RunArgs,
    grids: [Vec<f64>; 3],
) -> Result<(), Failure> {
    let workload = load_workload(input, common)?;
    let [sigma_grid, load_grid, dn_grid] = grids;
    let config = ExperimentConfig {
        schedulers: common.schedulers.clone(),
        sigma_grid,
        load_grid,
        dn_grid,
        runs_per_point: runs.runs,
        base_seed: common.seed,
        parallelism: runs
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    let records = sweep(axis, &workload, &config)?;
    emit(common.out.as_deref(), |w| write_records(&records, w))?;
    if axis != SweepAxis::Sigma {
        if let Some(out) = &common.out {
            let means = point_means(&records);
            emit(Some(&means_path(out)), |w| write_point_means(&means, w))?;
        }
    }
    Ok(())
}

fn or_default(grid: Vec<f64>, default: fn() -> Vec<f64>) -> Vec<f64> {
    if grid.is_empty() {
        default()
    } else {
        grid
    }
}

fn simulate(
    input: &InputArgs,
    common: &CommonArgs,
    sigma: f64,
    cal: CalibrationConfig,
    dump: Option<&Path>,
) -> Result<(), Failure> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Failure::config(format!("sigma must be >= 0, got {sigma}")));
    }
    let workload = load_workload(input, common)?;
    let mut summaries = Vec::new();
    let mut results = Vec::new();
    for &kind in &common.schedulers {
        let (summary, result) = simulate_once(&workload, kind, sigma, cal, common.seed)?;
        summaries.push(summary);
        results.push((kind, result));
    }
    emit(common.out.as_deref(), |w| write_records(&summaries, w))?;
    if let Some(path) = dump {
        let runs: Vec<(&str, &RunResult)> = results.iter().map(|(k, r)| (k.name(), r)).collect();
        emit(Some(path), |w| write_job_dump(&runs, w))?;
    }
    Ok(())
}

fn gen_trace(spec: &SyntheticSpec, format: Format, cal: CalibrationConfig, out: Option<&Path>) -> Result<(), Failure> {
    let trace = schedsim::synthetic_trace(spec)?;
    match format {
        Format::Swim => emit(out, |w| write_swim(&trace, w)),
        Format::Sized => {
            let sized = size_jobs(&trace, &calibrate(&trace, &cal)?)?;
            emit(out, |w| write_sized(&sized, w))
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            input,
            common,
            sigma,
            load,
            dn,
            dump,
        } => simulate(
            &input,
            &common,
            sigma,
            CalibrationConfig { load, dn_ratio: dn },
            dump.as_deref(),
        ),
        Command::SweepSigma {
            input,
            common,
            runs,
            sigmas,
            load,
            dn,
        } => run_sweep(
            SweepAxis::Sigma,
            &input,
            &common,
            &runs,
            [or_default(sigmas, default_sigma_grid), vec![load], vec![dn]],
        ),
        Command::SweepLoad {
            input,
            common,
            runs,
            loads,
            sigma,
            dn,
        } => run_sweep(
            SweepAxis::Load,
            &input,
            &common,
            &runs,
            [vec![sigma], or_default(loads, default_load_grid), vec![dn]],
        ),
        Command::SweepDn {
            input,
            common,
            runs,
            dns,
            sigma,
            load,
        } => run_sweep(
            SweepAxis::Dn,
            &input,
            &common,
            &runs,
            [vec![sigma], vec![load], or_default(dns, default_dn_grid)],
        ),
        Command::GenTrace {
            synthetic,
            format,
            load,
            dn,
            out,
        } => gen_trace(
            &synthetic,
            format,
            CalibrationConfig { load, dn_ratio: dn },
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("schedsim: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
