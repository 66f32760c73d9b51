mod commands;
mod config;
mod error;
mod plot;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

pub const VERSION: &str = env!("MAOA_VERSION");

/// Simulation of threshold-based amplitude amplification for optimisation.
///
/// Every flag can also be given as `flag-name = value` in a `--config`
/// file; flags on the command line win. Each command writes a manifest that
/// replays it when passed back as `--config`.
#[derive(Debug, Parser)]
#[command(name = "maoa", version = VERSION)]
pub struct Cli {
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = "maoa-out")]
    pub out: PathBuf,
    /// Flat `key = value` file supplying any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; drawn from entropy and recorded when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct DistArgs {
    /// Distribution file written by a generator.
    #[arg(long, conflicts_with = "normal")]
    pub dist: Option<PathBuf>,
    /// Use the standard normal continuum.
    #[arg(long)]
    pub normal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Maoa,
    Gas,
    Rgas,
    Classical,
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// Target ratio: the best `mu` fraction of the space counts as found.
    #[arg(long, conflicts_with = "optimal")]
    pub mu: Option<f64>,
    /// Target the optimal solutions of a finite space.
    #[arg(long)]
    pub optimal: bool,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    /// Hard ceiling on calls per run.
    #[arg(long, default_value_t = maoa::algorithms::DEFAULT_EFFORT_CAP)]
    pub effort_cap: u64,
    /// Rotation-count growth factor of GAS and RGAS.
    #[arg(long, default_value_t = maoa::algorithms::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Rotation cap of unrestricted GAS on the continuum.
    #[arg(long)]
    pub r_max: Option<u64>,
    /// Effort grid density, points per decade.
    #[arg(long, default_value_t = maoa::harness::POINTS_PER_DECADE)]
    pub per_decade: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Random CVRP instance and the cost distribution of all its solutions.
    GenCvrp {
        /// Number of delivery locations.
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 20)]
        capacity: u32,
        /// Refuse spaces larger than this.
        #[arg(long, default_value_t = 100_000_000)]
        budget: u64,
    },
    /// Portfolio instance and the return distribution of its low-risk
    /// portfolios.
    GenPortfolio {
        /// Price CSV to estimate from; synthetic prices otherwise.
        #[arg(long)]
        prices: Option<PathBuf>,
        #[arg(long, default_value_t = 12)]
        assets: usize,
        #[arg(long, default_value_t = 250)]
        days: usize,
        /// Net position: longs minus shorts.
        #[arg(long, default_value_t = 3)]
        net: i64,
        /// Fraction of portfolios, by risk, kept as the search space.
        #[arg(long, default_value_t = 0.1)]
        low_risk: f64,
    },
    /// Returns and covariance estimated from a price CSV.
    IngestPrices {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long, default_value_t = 0)]
        net: i64,
    },
    /// Summary statistics of a distribution.
    DistStats {
        #[command(flatten)]
        dist: DistArgs,
    },
    /// Success probability against threshold for `r` rotations.
    ResponseCurve {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        r: u64,
        /// Lowest threshold; the minimum, or -8 on the continuum.
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        /// Highest threshold; the median by default.
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
    },
    /// Expected measured quality against threshold for `r` rotations.
    ExpectationCurve {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        r: u64,
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Seeded runs of one algorithm and their success curve.
    Run {
        #[arg(long, value_enum)]
        algo: Algo,
        /// Final rotation count of MAOA, rotation cap of RGAS.
        #[arg(long, default_value_t = 64)]
        r: u64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Success curves for several algorithms and rotation counts.
    Sweep {
        #[arg(long, value_enum, num_args = 1.., default_values_t = [Algo::Maoa, Algo::Rgas, Algo::Gas, Algo::Classical])]
        algos: Vec<Algo>,
        #[arg(long, num_args = 1.., default_values_t = [8u64, 16, 32, 64, 128])]
        r_values: Vec<u64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Exact checks of the contracted complete graph and the partition
    /// experiment.
    VerifyReduced {
        #[arg(long, num_args = 1.., default_values_t = [2usize, 3, 5, 10])]
        parts: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        max_rounds: usize,
        /// Optimisation budget of the original study.
        #[arg(long)]
        full_budget: bool,
    },
    /// Amplification studies on 24-vertex circulant graphs.
    AppendixSuite {
        #[arg(long, num_args = 1.., default_values_t = maoa_walks::appendix::Study::ALL.map(|s| s.name().to_string()))]
        studies: Vec<String>,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        #[arg(long, default_value_t = 48)]
        distributions: usize,
        #[arg(long, default_value_t = 101)]
        landscape_resolution: usize,
        #[arg(long)]
        full_budget: bool,
    },
    /// SVG line chart of CSV columns.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        /// Column for the horizontal axis; the first by default.
        #[arg(long)]
        x: Option<String>,
        /// Columns to draw; every other numeric column by default.
        #[arg(long, num_args = 1..)]
        y: Vec<String>,
        #[arg(long)]
        log_x: bool,
        #[arg(long)]
        log_y: bool,
        #[arg(long)]
        title: Option<String>,
        /// Output file name inside the output directory.
        #[arg(long, default_value = "plot.svg")]
        name: String,
    },
}

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let cmd = Cli::command();
    let argv = config::inject(&cmd, argv)?;
    let matches = match cmd.clone().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let mut cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Validation(e.to_string()))?;
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let mut manifest = config::resolved(&cmd, name, sub);
    let seed = *cli.seed.get_or_insert_with(rand::random);
    manifest.set("seed", seed);
    manifest.set("version", VERSION);
    commands::dispatch(&cli, manifest)
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
