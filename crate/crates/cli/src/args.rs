//! Command-line flags. Defaults mirror the library defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sigrecon_core::Mode;

#[derive(Debug, Parser)]
#[command(name = "sigrecon", version, about = "Truncated path signatures and shortest-path recovery")]
pub struct Cli {
    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, global = true, env = "SIGRECON_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a test path and write it as CSV.
    Simulate {
        #[command(subcommand)]
        kind: SimulateKind,
    },
    /// Compute the truncated signature of a CSV path.
    Sign(SignArgs),
    /// Recover the shortest path generating a target signature.
    Reconstruct(ReconstructArgs),
    /// Compare an original and a reconstructed path.
    Compare(CompareArgs),
    /// Penalty-mode solves over a list of penalty weights.
    GammaSweep(GammaSweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum SimulateKind {
    /// Ornstein-Uhlenbeck process `dX = κ(θ − X)dt + σ dW`, independent coordinates.
    Ou(OuArgs),
    /// Scaled Brownian motion `σW`.
    Bm(BmArgs),
}

#[derive(Debug, Args)]
pub struct OuArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Long-term mean.
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub theta: f64,
    /// Mean-reversion speed.
    #[arg(long, default_value_t = 0.5)]
    pub kappa: f64,
    /// Volatility.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Starting value of every coordinate (the written path is shifted to start at 0).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x0: f64,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct BmArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Number of time steps (the CSV has steps + 1 rows).
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Seed of the ChaCha20 generator.
    #[arg(long)]
    pub seed: u64,
    /// Output CSV [default: <out-dir>/<kind>_seed<seed>.csv].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SignArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub depth: usize,
    /// Output JSON [default: <out-dir>/<input stem>.sig.json].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Grid size D.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Iteration cap per fixed-horizon solve [default: 2000 penalty, 3000 vartime].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Initial augmentation constant C.
    #[arg(long, default_value_t = 1.0)]
    pub c0: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c_grow: f64,
    #[arg(long, default_value_t = 0.9)]
    pub c_shrink: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub c_min: f64,
    #[arg(long, default_value_t = 1e15)]
    pub c_max: f64,
    #[arg(long, default_value_t = 50)]
    pub fp_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub fp_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub stall_tol: f64,
    #[arg(long, default_value_t = 10)]
    pub stall_window: usize,
    /// Stop once the objective falls to this value [default: 0 penalty, eps/10 vartime].
    #[arg(long)]
    pub cost_floor: Option<f64>,
    /// Penalty weight γ (penalty mode only).
    #[arg(long, default_value_t = 1e3)]
    pub gamma: f64,
    /// Horizon T (penalty mode only).
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Terminal-error tolerance of the horizon search.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Initial horizon [default: max(|level-1 part|, 1e-3)].
    #[arg(long)]
    pub t_init: Option<f64>,
    #[arg(long, default_value_t = 1.5)]
    pub grow: f64,
    #[arg(long, default_value_t = 25)]
    pub refine_steps: usize,
    #[arg(long, default_value_t = 0.5)]
    pub refine_shrink: f64,
    #[arg(long, default_value_t = 20)]
    pub max_expansions: usize,
}

#[derive(Debug, Args)]
pub struct TargetArgs {
    /// Target signature JSON.
    #[arg(long, short)]
    pub target: PathBuf,
    /// Tolerance of the group-likeness check on the target.
    #[arg(long, default_value_t = 1e-6)]
    pub group_tol: f64,
    /// Warn instead of failing when the target is not group-like.
    #[arg(long)]
    pub allow_non_group_like: bool,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value = "penalty", value_parser = parse_mode)]
    pub mode: Mode,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Vartime only: run a penalty solve first and start the search at its length.
    #[arg(long)]
    pub seed_time_from_penalty: bool,
    /// Result JSON [default: <out-dir>/result.json].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Reconstructed path CSV [default: <out-dir>/reconstruction.csv].
    #[arg(long)]
    pub path_output: Option<PathBuf>,
    /// Fail (exit 3) if the terminal error f exceeds this value.
    #[arg(long)]
    pub max_endpoint_error: Option<f64>,
    /// Fail (exit 3) if any signature coefficient of the reconstruction differs
    /// from the target by more than this value.
    #[arg(long)]
    pub max_coeff_error: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub reconstructed: PathBuf,
    #[arg(long)]
    pub depth: usize,
    /// Number of rows of the plot CSV (uniform in normalized time).
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Plot CSV [default: <out-dir>/compare.csv].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Fail (exit 3) if the largest coefficient difference exceeds this value.
    #[arg(long)]
    pub max_coeff_error: Option<f64>,
    /// Fail (exit 3) if the reconstruction is longer than (1 + slack) times the original.
    #[arg(long)]
    pub length_slack: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GammaSweepArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Comma-separated penalty weights.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    pub gammas: Vec<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Table CSV [default: <out-dir>/gamma_sweep.csv].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Fail (exit 3) unless the terminal error is non-increasing in γ, allowing
    /// each step to rise by this relative amount.
    #[arg(long)]
    pub check_trend: Option<f64>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse::<Mode>().map_err(|e| e.to_string())
}
