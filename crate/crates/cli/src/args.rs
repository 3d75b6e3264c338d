use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use lagspec_core::Detrend;

#[derive(Debug, Parser)]
#[command(
    name = "lagspec",
    version,
    about = "Eigen-spectra of lagged correlations in traffic counter series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equal-time spectrum, lag sweep, trajectories and their power spectra.
    Analyze(AnalyzeArgs),
    /// Before/after comparison around a noise or periodic injection.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "synth"])))]
pub struct SourceArgs {
    /// Count matrix CSV: header `t,<id>,...`, one row per time stamp.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Synthetic data: `default` or a JSON generator config.
    #[arg(long, value_name = "PRESET|PATH")]
    pub synth: Option<String>,

    /// Replace non-positive counts by FACTOR times the series median.
    #[arg(long, value_name = "FACTOR", num_args = 0..=1, default_missing_value = "1e-6")]
    pub epsilon_clamp: Option<f64>,

    /// Overrides the generator seed and the injection seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetrendArg {
    Mean,
    None,
}

impl From<DetrendArg> for Detrend {
    fn from(d: DetrendArg) -> Self {
        match d {
            DetrendArg::Mean => Detrend::Mean,
            DetrendArg::None => Detrend::None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// Largest lag, in sampling steps.
    #[arg(long, default_value_t = 100)]
    pub tau_max: usize,

    /// Sorted spectral positions to follow (default: 1, N/2, N-1).
    #[arg(long, value_delimiter = ',', value_name = "K1,K2,...")]
    pub watch: Option<Vec<usize>>,

    #[arg(long, value_enum, default_value_t = DetrendArg::Mean)]
    pub detrend: DetrendArg,

    /// Apply a Hann taper before the transform.
    #[arg(long)]
    pub hann: bool,

    /// Minimum peak prominence in units of the spectrum median.
    #[arg(long, default_value_t = 5.0)]
    pub prominence_factor: f64,

    /// Characteristic periods reported per trajectory.
    #[arg(long, default_value_t = 2)]
    pub top_periods: usize,

    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "lagspec-out")]
    pub out: PathBuf,

    /// Also write every D(τ) as matrix_lag_<τ>.csv.
    #[arg(long)]
    pub dump_matrix: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,

    /// Injection spec as JSON.
    #[arg(long, value_name = "SPEC.json")]
    pub inject: PathBuf,

    /// Power ratio at or above which a peak counts as enhanced.
    #[arg(long, default_value_t = 2.0)]
    pub enhanced: f64,

    /// Power ratio at or below which a peak counts as suppressed.
    #[arg(long, default_value_t = 0.5)]
    pub suppressed: f64,
}
