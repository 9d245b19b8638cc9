//! Command-line front end. Every subcommand is a thin wrapper over the
//! library: load the configuration, run, write CSV files, map the outcome
//! to an exit code (0 success, 1 usage or config error, 2 collision
//! recorded, 3 internal error).

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use mergesim::config::{Condition, ConfigError, ControllerKind, OptimizerKind, SimConfig};
use mergesim::experiment::{compare_optimizers, run_cell, run_grid};
use mergesim::sim::result::{write_metrics_csv, write_trajectory_csv, MetricsRow};

#[derive(Parser)]
#[command(
    name = "mergesim",
    version,
    about = "Deterministic on-ramp merging simulator for mixed human/automated traffic"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one merging run and write its trajectory and metrics.
    Run(RunArgs),
    /// Run every condition preset under both controllers, several seeds each.
    Grid(GridArgs),
    /// Run the cooperative controller under each optimizer on paired seeds.
    CompareOptimizers(CompareArgs),
    /// Load a configuration file and report whether it is valid.
    ValidateConfig(ValidateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (TOML). Missing keys fall back to defaults.
    #[arg(long, env = "MERGESIM_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,
    /// Random seed override.
    #[arg(long, env = "MERGESIM_SEED")]
    seed: Option<u64>,
    /// Output directory for CSV files.
    #[arg(long, env = "MERGESIM_OUT", default_value = "out", value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Traffic-mix preset layered over the configuration.
    #[arg(long, env = "MERGESIM_CONDITION")]
    condition: Option<Condition>,
    /// Controller override.
    #[arg(long, env = "MERGESIM_CONTROLLER")]
    controller: Option<ControllerKind>,
    /// Plan optimizer override.
    #[arg(long, env = "MERGESIM_OPTIMIZER")]
    optimizer: Option<OptimizerKind>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Plan optimizer used by the cooperative controller.
    #[arg(long, env = "MERGESIM_OPTIMIZER")]
    optimizer: Option<OptimizerKind>,
    /// Seeds per grid cell, counting up from the base seed.
    #[arg(long, env = "MERGESIM_RUNS", default_value_t = 10)]
    runs: u64,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Traffic-mix preset the comparison runs under.
    #[arg(long, env = "MERGESIM_CONDITION", default_value = "1")]
    condition: Condition,
    /// Paired seeds per optimizer, counting up from the base seed.
    #[arg(long, env = "MERGESIM_RUNS", default_value_t = 10)]
    runs: u64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Configuration file (TOML) to check.
    #[arg(long, env = "MERGESIM_CONFIG", value_name = "FILE")]
    config: PathBuf,
}

enum CliError {
    Config(ConfigError),
    Io(io::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_COLLISION: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(CliError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

fn load_base(common: &CommonArgs) -> Result<SimConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Grid(args) => cmd_grid(args),
        Command::CompareOptimizers(args) => cmd_compare(args),
        Command::ValidateConfig(args) => cmd_validate(args),
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, CliError> {
    let base = load_base(&args.common)?;
    let controller = args.controller.unwrap_or(base.controller);
    let optimizer = args.optimizer.unwrap_or(base.optimizer);
    let (cfg, rec, metrics) =
        run_cell(&base, args.condition, controller, optimizer, base.seed);

    let dir = &args.common.out;
    fs::create_dir_all(dir)?;
    let mut traj = BufWriter::new(File::create(dir.join("trajectory.csv"))?);
    write_trajectory_csv(&mut traj, &rec)?;
    traj.flush()?;
    let row = MetricsRow {
        condition: args.condition.map_or_else(|| "custom".into(), |c| c.to_string()),
        controller: controller.to_string(),
        optimizer: optimizer.to_string(),
        metrics,
    };
    let mut met = BufWriter::new(File::create(dir.join("metrics.csv"))?);
    write_metrics_csv(&mut met, std::slice::from_ref(&row))?;
    met.flush()?;

    println!(
        "run: seed {} controller {} optimizer {} -> {}",
        cfg.seed,
        controller,
        optimizer,
        dir.display()
    );
    println!(
        "  crit_dist {:.3}  aver_acc {:.4}  stab_time {:.2}  lsrv {:.1}  fuel {:.2}",
        metrics.crit_dist, metrics.aver_acc, metrics.stab_time, metrics.lsrv, metrics.fuel
    );
    if rec.collided {
        eprintln!("collision recorded during the run");
        return Ok(ExitCode::from(EXIT_COLLISION));
    }
    Ok(ExitCode::SUCCESS)
}

fn seed_list(base: u64, runs: u64) -> Vec<u64> {
    (0..runs).map(|i| base.wrapping_add(i)).collect()
}

fn cmd_grid(args: GridArgs) -> Result<ExitCode, CliError> {
    let base = load_base(&args.common)?;
    let optimizer = args.optimizer.unwrap_or(base.optimizer);
    let seeds = seed_list(base.seed, args.runs.max(1));
    let started = Instant::now();
    let summary = run_grid(&base, optimizer, &seeds, &args.common.out)?;
    println!(
        "grid: {} cells ({} seeds each) with optimizer {} in {:.1} s -> {}",
        summary.cells.len(),
        seeds.len(),
        optimizer,
        started.elapsed().as_secs_f64(),
        args.common.out.display()
    );
    let mut table = Vec::new();
    write_metrics_csv(&mut table, &summary.rows)?;
    io::stdout().write_all(&table)?;
    if summary.any_collision {
        eprintln!("collision recorded in at least one grid cell");
        return Ok(ExitCode::from(EXIT_COLLISION));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode, CliError> {
    let base = load_base(&args.common)?;
    let seeds = seed_list(base.seed, args.runs.max(1));
    let started = Instant::now();
    let rows = compare_optimizers(&base, args.condition, &seeds, &args.common.out)?;
    println!(
        "compare-optimizers: condition {} over {} paired seeds in {:.1} s -> {}",
        args.condition,
        seeds.len(),
        started.elapsed().as_secs_f64(),
        args.common.out.display()
    );
    println!("optimizer,mean_plan_cost,crit_dist,aver_acc,stab_time,lsrv,fuel");
    for row in &rows {
        let m = &row.mean_metrics;
        println!(
            "{},{},{},{},{},{},{}",
            row.optimizer, row.mean_cost, m.crit_dist, m.aver_acc, m.stab_time, m.lsrv, m.fuel
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, CliError> {
    let cfg = SimConfig::load(&args.config)?;
    println!(
        "{}: valid (seed {}, controller {}, optimizer {}, {} vehicles/lane)",
        args.config.display(),
        cfg.seed,
        cfg.controller,
        cfg.optimizer,
        cfg.traffic.vehicles_per_lane
    );
    Ok(ExitCode::SUCCESS)
}
