mod commands;
mod config;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use padic_lab::LabError;

use config::ConfigError;

#[derive(Parser, Debug)]
#[command(
    name = "padic-lab",
    version,
    about = "Experiments in p-adic harmonic analysis"
)]
pub struct Cli {
    /// Flat JSON file of parameters; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for CSV and replay files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Runs the exact-identity checks.
    Selftest {
        #[arg(long)]
        quick: bool,
    },
    #[command(subcommand)]
    Fourier(FourierCmd),
    #[command(subcommand)]
    Decoupling(DecouplingCmd),
    #[command(subcommand)]
    Vinogradov(VinogradovCmd),
    #[command(subcommand)]
    Projection(ProjectionCmd),
    #[command(subcommand)]
    Kakeya(KakeyaCmd),
    #[command(subcommand)]
    Constants(ConstantsCmd),
}

#[derive(Subcommand, Debug)]
pub enum FourierCmd {
    /// Transform and invert random functions, checking round trip and Plancherel.
    Roundtrip(RoundtripArgs),
}

#[derive(Args, Debug)]
pub struct RoundtripArgs {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub a: Option<u32>,
    #[arg(long)]
    pub b: Option<u32>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum DecouplingCmd {
    /// Lower-bound search for the decoupling constant of the moment-curve boxes.
    Estimate(EstimateArgs),
    /// Randomized verification of one structural lemma.
    Harness(HarnessArgs),
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Boxes of the moment curve at scale `p^-level`.
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long, value_parser = config::parse_exponent)]
    pub q: Option<f64>,
    #[arg(long, value_parser = config::parse_exponent)]
    pub r: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct HarnessArgs {
    #[arg(long)]
    pub lemma: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_parser = config::parse_exponent)]
    pub q: Option<f64>,
    #[arg(long, value_parser = config::parse_exponent)]
    pub r: Option<f64>,
    #[arg(long)]
    pub strategy: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum VinogradovCmd {
    /// Exact count of J_{s,n}(N).
    Count(VinoArgs),
    /// The explicit upper bound, in log space.
    Bound(VinoArgs),
    /// Lattice moment of the exponential sum against the solution count.
    Moment(MomentArgs),
}

#[derive(Args, Debug)]
pub struct VinoArgs {
    #[arg(long)]
    pub s: Option<u32>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long = "big-n", visible_alias = "N")]
    pub big_n: Option<u64>,
    /// Largest hash table, in bytes.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Args, Debug)]
pub struct MomentArgs {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub l: Option<u32>,
    #[arg(long)]
    pub s: Option<u32>,
    #[arg(long)]
    pub n: Option<u32>,
}

#[derive(Subcommand, Debug)]
pub enum ProjectionCmd {
    /// Pushforward masses, exceptional sets and tube counts for one fractal set.
    Run(ProjectionArgs),
}

#[derive(Subcommand, Debug)]
pub enum KakeyaCmd {
    /// Tube incidences for one fractal set plus an exhaustive tube-geometry check.
    Run(KakeyaArgs),
}

#[derive(Args, Debug)]
pub struct ProjectionArgs {
    /// Overrides the generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct KakeyaArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Width and resolution exponent of the geometry check.
    #[arg(long)]
    pub tube_depth: Option<u32>,
}

#[derive(Subcommand, Debug)]
pub enum ConstantsCmd {
    /// Log-space values of the explicit constants.
    Eval(ConstantsArgs),
}

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    /// One of proj, kakeya, decprop, momentcurve, vinobound; all when omitted.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub s: Option<u32>,
    #[arg(long)]
    pub ln_n: Option<f64>,
}

/// A randomized property failed; reported with exit code 1.
#[derive(Debug)]
pub struct PropertyFailure(pub String);

impl std::fmt::Display for PropertyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "property failed: {}", self.0)
    }
}

impl std::error::Error for PropertyFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<LabError>() {
        Some(LabError::BudgetExceeded(_)) => 3,
        Some(
            LabError::InvalidParameter(_)
            | LabError::Precondition(_)
            | LabError::Dimension(_)
            | LabError::NotPrime(_)
            | LabError::PrimeMismatch(..),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
