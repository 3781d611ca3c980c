use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "noeffect",
    version,
    about = "Test of no-effect for functional covariates on functional responses"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the test on a pair of curve CSV files.
    Test(TestArgs),
    /// Monte Carlo rejection rates for simulated designs.
    Power(PowerArgs),
    /// Write one simulated (responses, covariates) pair as curve CSV files.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BasisArg {
    BridgeSine,
    MotionSine,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CalibrationArg {
    Bootstrap,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScenarioArg {
    NullLinear,
    Linear,
    Concurrent,
    Quadratic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum QuadraticModeArg {
    PaperLiteral,
    Centered,
}

/// Test options shared by `test` and `power`. Unset flags fall back to the
/// config file, then to built-in defaults.
#[derive(Debug, Clone, Args)]
pub struct TuningArgs {
    /// JSON configuration file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Number of basis components.
    #[arg(long)]
    pub p: Option<usize>,

    #[arg(long, value_enum)]
    pub basis: Option<BasisArg>,

    /// Bandwidth(s) on the rank scale, comma separated.
    #[arg(long = "bandwidth", alias = "bandwidths", value_delimiter = ',')]
    pub bandwidths: Option<Vec<f64>>,

    /// Penalty charged to every direction other than gamma0.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// `uninformative`, `first_axis`, or comma-separated coefficients.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma0: Option<String>,

    /// Number of half-sphere grid directions.
    #[arg(long)]
    pub grid: Option<usize>,

    /// Bootstrap replicates.
    #[arg(long)]
    pub bootstrap: Option<usize>,

    #[arg(long)]
    pub level: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_enum)]
    pub calibration: Option<CalibrationArg>,

    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Output format; inferred from the `--out` extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub responses: PathBuf,

    #[arg(long)]
    pub covariates: PathBuf,

    /// Do not subtract the sample mean curve from the responses.
    #[arg(long)]
    pub no_center: bool,

    /// Include the standardized statistic of every grid direction.
    #[arg(long)]
    pub per_direction: bool,

    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Design(s), comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub scenario: Option<Vec<ScenarioArg>>,

    /// Effect size (defaults: 0.3 linear, 0.6 concurrent, 1 quadratic).
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,

    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,

    /// Karhunen-Loeve terms.
    #[arg(long)]
    pub kl_terms: Option<usize>,

    /// Points of the uniform time grid.
    #[arg(long)]
    pub grid_points: Option<usize>,

    #[arg(long, value_enum)]
    pub quadratic_mode: Option<QuadraticModeArg>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    /// Monte Carlo replications.
    #[arg(long)]
    pub reps: Option<usize>,

    /// Validate and print the effective configuration without running.
    #[arg(long)]
    pub dry_run: bool,

    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Replication index within the seed's stream family.
    #[arg(long, default_value_t = 0)]
    pub replication: u64,

    /// Writes `<prefix>_responses.csv` and `<prefix>_covariates.csv`.
    #[arg(long)]
    pub out_prefix: PathBuf,
}
