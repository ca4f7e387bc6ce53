//! `regsel`: fit restricted linear models, select among candidate
//! restriction sets, run seeded simulation experiments, and verify the
//! closed-form optimism targets by Monte Carlo.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.

mod commands;
mod files;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "regsel",
    version,
    about = "Restricted-regression model selection and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a restricted least squares model from CSV inputs.
    Fit(FitArgs),
    /// Score a candidate family and pick the argmin per criterion.
    Select(SelectArgs),
    /// Run a seeded Monte Carlo experiment from a JSON config.
    Simulate(SimulateArgs),
    /// Check the closed-form optimism values against Monte Carlo estimates.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Headerless CSV design matrix.
    #[arg(long)]
    design: PathBuf,
    /// Headerless CSV response, one value per line.
    #[arg(long)]
    response: PathBuf,
    /// JSON restrictions: {"R": [[...]], "r": [...]} or ["b1=b4", "b7=0"].
    #[arg(long)]
    restrictions: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    /// Headerless CSV design matrix.
    #[arg(long)]
    design: PathBuf,
    /// Headerless CSV response, one value per line.
    #[arg(long)]
    response: PathBuf,
    /// Candidate family shape.
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Base restrictions (required for powerset and nested-exclusion).
    #[arg(long)]
    restrictions: Option<PathBuf>,
    /// Comma-separated list: aicc,raicc,cp,fpe,rcp,sp,bic,gcv,loocv,tenfold.
    #[arg(long)]
    criteria: String,
    /// Seed for the K-fold CV split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-candidate score table as CSV.
    #[arg(long)]
    scores_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Nested,
    Powerset,
    NestedExclusion,
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignArg {
    Fixed,
    Random,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config JSON, or a manifest.json from a previous run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (replications.csv, summary.json, manifest.json).
    #[arg(long)]
    out: PathBuf,
    /// Override the configured replication count.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured AR(1) correlation.
    #[arg(long)]
    rho: Option<f64>,
    /// Override the configured signal: low, high, or a sigma0_sq value.
    #[arg(long)]
    signal: Option<String>,
    /// Override the configured design: fixed or random.
    #[arg(long = "x-design", value_enum)]
    x_design: Option<DesignArg>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    p: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long = "sigma0-sq", default_value_t = 1.0)]
    sigma0_sq: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 200_000)]
    reps: usize,
    #[arg(long, default_value_t = 17)]
    seed: u64,
    /// Also write the verification table as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// CLI error; the variant decides the exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation (exit 2).
    Usage(String),
    /// Unreadable or malformed inputs (exit 3).
    Data(String),
    /// Propagated library error (exit 3 or 4 by kind).
    Core(regsel::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<regsel::Error> for CliError {
    fn from(e: regsel::Error) -> Self {
        CliError::Core(e)
    }
}

fn core_exit_code(e: &regsel::Error) -> u8 {
    use regsel::Error::*;
    match e {
        // malformed or inconsistent inputs
        Dimension(_) | NonFinite(_) | Config { .. } | PowersetTooLarge { .. } => 3,
        UnknownCriterion(_) => 2,
        Replication { source, .. } => core_exit_code(source),
        FoldDegeneracy { source, .. } => core_exit_code(source).max(4),
        // numerical failures
        RestrictionRank { .. } | SingularDesign { .. } | SingularSystem(_)
        | UndefinedVariance { .. } | LeverageSingularity { .. } | NoFeasibleModel { .. }
        | Domain(_) | DegenerateSignal | NotPositiveDefinite | CovarianceSingularity
        | AssumptionViolation { .. } | InsufficientPairs { .. } => 4,
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Fit(args) => commands::fit::run(&args),
        Cmd::Select(args) => commands::select::run(&args),
        Cmd::Simulate(args) => commands::simulate::run(&args),
        Cmd::Verify(args) => commands::verify::run(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let is_usage_error = e.use_stderr();
            let _ = e.print();
            return if is_usage_error {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
