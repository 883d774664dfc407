use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;

use seamless::config::{self, RunConfig};
use seamless::oc_runner::{
    allocation_sweep, calibrate_n, compare_with_conventional, run_oc_with, run_replications, write_oc_csv,
    write_sweep_csv, write_trace_csv, Calibration, OperatingCharacteristics, RunOptions,
};
use seamless::trial_engine::TrialMode;
use seamless::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_UNREACHABLE: u8 = 3;

/// Simulate seamless phase 2/3 oncology trials with interim dose selection.
#[derive(Parser, Debug)]
#[command(name = "seamless", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate operating characteristics of one configuration.
    Simulate(SimulateArgs),
    /// Find the smallest (n1, n2) on a grid that reaches a target power.
    Calibrate(CalibrateArgs),
    /// Vary n1 at a fixed total enrollment.
    Sweep(SweepArgs),
    /// Sample-size savings against a conventional phase 2 + phase 3 program.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct MonteCarlo {
    /// Number of simulated trials.
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    mc: MonteCarlo,
    /// Output CSV; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one row per simulated trial to this CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Simulate the conventional counterpart instead.
    #[arg(long)]
    conventional: bool,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Target generalized power.
    #[arg(long, default_value_t = 0.8)]
    target: f64,
    /// JSON file `{"n1": [...], "n2": [...]}`.
    #[arg(long)]
    grid: PathBuf,
    #[command(flatten)]
    mc: MonteCarlo,
    /// Calibrate the conventional counterpart.
    #[arg(long)]
    conventional: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Total planned enrollment held fixed across rows.
    #[arg(long)]
    total: u32,
    /// Stage-1 per-arm sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n1: Vec<u32>,
    #[command(flatten)]
    mc: MonteCarlo,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    /// Configuration of the conventional counterpart (its own n1, n2).
    #[arg(long)]
    cc_config: PathBuf,
    #[command(flatten)]
    mc: MonteCarlo,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct Grid {
    n1: Vec<u32>,
    n2: Vec<u32>,
}

/// Failure categories that map to distinct exit codes.
#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Unreachable,
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::Config(_)) => Self::Config(e),
            _ => Self::Other(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Calibrate(args) => calibrate(args),
        Command::Sweep(args) => sweep(args),
        Command::Compare(args) => compare(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("{e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Unreachable) => ExitCode::from(EXIT_UNREACHABLE),
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    Ok(config::load(path)?)
}

fn options(mc: &MonteCarlo, conventional: bool) -> RunOptions {
    let mode = if conventional { TrialMode::Conventional } else { TrialMode::Seamless };
    RunOptions { mode, workers: mc.workers }
}

fn check_reps(mc: &MonteCarlo) -> Result<(), Failure> {
    if mc.reps == 0 {
        return Err(Error::Config("--reps must be at least 1".into()).into());
    }
    if mc.workers == Some(0) {
        return Err(Error::Config("--workers must be at least 1".into()).into());
    }
    Ok(())
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    check_reps(&args.mc)?;
    let run = load(&args.config)?;
    let opts = options(&args.mc, args.conventional);
    info!("simulating {} with {} replications", run.scenario.name, args.mc.reps);
    let oc = if let Some(trace) = &args.trace {
        let rows = run_replications(&run.design, &run.scenario, args.mc.reps, args.mc.seed, opts)?;
        write_trace_csv(output(Some(trace))?, &rows)?;
        OperatingCharacteristics::from_summaries(&run.design, &run.scenario, opts.mode, args.mc.seed, &rows)
    } else {
        run_oc_with(&run.design, &run.scenario, args.mc.reps, args.mc.seed, opts)?
    };
    write_oc_csv(output(args.out.as_deref())?, &[oc])?;
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<(), Failure> {
    check_reps(&args.mc)?;
    let run = load(&args.config)?;
    let text = std::fs::read_to_string(&args.grid)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.grid.display())))?;
    let grid: Grid = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: invalid grid: {e}", args.grid.display())))?;
    let opts = options(&args.mc, args.conventional);
    let result =
        calibrate_n(&run.design, &run.scenario, args.target, &grid.n1, &grid.n2, args.mc.reps, args.mc.seed, opts)?;
    let p = result.point();
    let status = if result.is_reached() { "reached" } else { "unreachable" };
    println!("status,n1,n2,planned_total,gen_power,gen_power_se,avg_n");
    let gp = p.oc.generalized_power.expect("calibration requires an optimal dose");
    println!("{status},{},{},{},{},{},{}", p.n1, p.n2, p.planned_total, gp.estimate, gp.se, p.oc.avg_sample_size);
    match result {
        Calibration::Reached(_) => Ok(()),
        Calibration::Unreachable(_) => {
            eprintln!("no grid point reached generalized power {}", args.target);
            Err(Failure::Unreachable)
        }
    }
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    check_reps(&args.mc)?;
    let run = load(&args.config)?;
    let rows = allocation_sweep(
        &run.design,
        &run.scenario,
        args.total,
        &args.n1,
        args.mc.reps,
        args.mc.seed,
        options(&args.mc, false),
    )?;
    if rows.is_empty() {
        return Err(Error::Config(format!("no n1 value is feasible within a total of {}", args.total)).into());
    }
    write_sweep_csv(output(args.out.as_deref())?, &rows)?;
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), Failure> {
    check_reps(&args.mc)?;
    let run = load(&args.config)?;
    let cc = load(&args.cc_config)?;
    if cc.scenario.doses != run.scenario.doses
        || cc.scenario.control != run.scenario.control
        || cc.scenario.historical != run.scenario.historical
    {
        return Err(Error::Config("both configurations must describe the same scenario truth".into()).into());
    }
    let report = compare_with_conventional(
        &run.design,
        &cc.design,
        &run.scenario,
        args.mc.reps,
        args.mc.seed,
        args.mc.workers,
    )?;
    let power = |oc: &OperatingCharacteristics| oc.generalized_power.map(|p| p.estimate.to_string()).unwrap_or_default();
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "design,scenario,reps,seed,seamless_avg_n,conventional_avg_n,savings,seamless_gen_power,conventional_gen_power")
        .map_err(anyhow::Error::from)?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{}",
        run.design.design,
        run.scenario.name,
        args.mc.reps,
        args.mc.seed,
        report.seamless.avg_sample_size,
        report.conventional.avg_sample_size,
        report.savings,
        power(&report.seamless),
        power(&report.conventional)
    )
    .map_err(anyhow::Error::from)?;
    out.flush().map_err(anyhow::Error::from)?;
    Ok(())
}
