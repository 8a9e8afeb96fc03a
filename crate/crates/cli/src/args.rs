use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crnkit::config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

/// Deficiency-zero analysis and product-form stationary distributions for
/// stochastic reaction networks.
#[derive(Debug, Parser)]
#[command(name = "crn", version)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Output format on stdout.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural report: complexes, linkage classes, rank, deficiency.
    Analyze(FileArgs),
    /// Complex-balanced equilibrium of the deterministic model.
    Equilibrium(EquilibriumArgs),
    /// Product-form stationary distribution on the class of x0.
    Stationary(StationaryArgs),
    /// Exact stochastic simulation.
    Simulate(SimulateArgs),
    /// Compare the product form against a numerical stationary solve.
    Verify(VerifyArgs),
    /// Print the numeric defaults.
    Defaults,
}

#[derive(Debug, Args)]
pub struct FileArgs {
    /// Network in `.crn` format.
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    pub file: PathBuf,
    /// Pick the equilibrium in the compatibility class of this point.
    #[arg(long, value_delimiter = ',')]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ClassArgs {
    pub file: PathBuf,
    /// Initial state, comma separated in species order.
    #[arg(long, value_delimiter = ',', required = true)]
    pub x0: Vec<i64>,
    /// System volume for classical scaling of the rate constants.
    #[arg(long)]
    pub volume: Option<f64>,
    /// Box truncation: one bound for all species or one per species.
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<i64>>,
    /// Tail mass allowed outside an automatically chosen window.
    #[arg(long, default_value_t = config::TAIL_TOL)]
    pub tail_tol: f64,
    /// Give up enumerating beyond this many states.
    #[arg(long, default_value_t = config::STATE_CAP)]
    pub cap: usize,
}

#[derive(Debug, Args)]
pub struct StationaryArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    /// Also write the distribution as CSV to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    /// One recorded path.
    Path,
    /// Occupation measure of one long path after a burn-in.
    TimeAverage,
    /// Endpoints of independent replicas.
    Ensemble,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub file: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub x0: Vec<i64>,
    #[arg(long)]
    pub volume: Option<f64>,
    /// Final time T.
    #[arg(long = "t-final", default_value_t = config::T_FINAL)]
    pub t_final: f64,
    #[arg(long, value_enum, default_value_t = SimMode::Path)]
    pub mode: SimMode,
    #[arg(long, default_value_t = 0.0)]
    pub burn_in: f64,
    #[arg(long, default_value_t = 1000)]
    pub replicas: u64,
    #[arg(long, env = "CRN_SEED", default_value_t = config::SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = config::MAX_JUMPS)]
    pub max_jumps: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    /// Total-variation threshold for a pass.
    #[arg(long, env = "CRN_TOL", default_value_t = config::VERIFY_TV)]
    pub tol: f64,
    /// Stationary solver: auto, gth-dense, sparse-lu or gauss-seidel.
    #[arg(long, default_value = "auto")]
    pub solver: String,
    /// Negative control: multiply rate constant K by F in the formula path
    /// only. Given as K=F.
    #[arg(long, value_parser = parse_perturbation)]
    pub perturb_rate: Vec<(usize, f64)>,
    /// Also run a time-averaged SSA of this length and report its distance.
    #[arg(long)]
    pub ssa_time: Option<f64>,
    #[arg(long, env = "CRN_SEED", default_value_t = config::SEED)]
    pub seed: u64,
}

fn parse_perturbation(s: &str) -> Result<(usize, f64), String> {
    let (k, f) = s.split_once('=').ok_or_else(|| format!("expected K=FACTOR, got `{s}`"))?;
    let k = k.trim().parse().map_err(|e| format!("reaction index: {e}"))?;
    let f: f64 = f.trim().parse().map_err(|e| format!("factor: {e}"))?;
    if !(f > 0.0 && f.is_finite()) {
        return Err(format!("factor {f} must be positive"));
    }
    Ok((k, f))
}
