//! Command-line front end: loads or generates counts, runs the lag sweep or
//! an injection experiment, and writes CSV/JSON artifacts to one directory.

pub mod args;
pub mod json;
mod output;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use lagspec_core::{
    load_counts, synth_generate, CountMatrix, InjectionSpec, LoadOptions, ResonanceThresholds,
    SpectrumOptions, SynthConfig, Taper,
};
use serde::Serialize;
use thiserror::Error;

pub use args::{Cli, Command};

pub const THREADS_ENV: &str = "LAGSPEC_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] lagspec_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for configuration problems, 1 for failures inside the pipeline.
    pub fn exit_code(&self) -> i32 {
        use lagspec_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::UnknownSeries(_) | E::ConfigInvalid(_) | E::WindowOutOfRange { .. }) => 2,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Caps the global rayon pool at `LAGSPEC_THREADS` when set.
pub fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize =
        raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
            CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot configure thread pool: {e}")))
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze(a) => output::analyze(&a),
        Command::Experiment(e) => output::experiment(&e),
    }
}

/// Where the counts came from, echoed into `config.json`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Input(PathBuf),
    Synth(SynthConfig),
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub command: &'static str,
    pub source: Source,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_clamp: Option<f64>,
    pub tau_max: usize,
    pub watch_positions: Vec<usize>,
    pub spectrum: SpectrumOptions,
    pub top_periods: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ResonanceThresholds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injection: Option<InjectionSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub(crate) fn load_source(src: &args::SourceArgs) -> CliResult<(Source, CountMatrix)> {
    match (&src.input, &src.synth) {
        (Some(path), None) => {
            let file = File::open(path).map_err(io_err(path))?;
            let options = LoadOptions {
                epsilon_clamp: src.epsilon_clamp,
            };
            let counts = load_counts(BufReader::new(file), options)?;
            Ok((Source::Input(path.clone()), counts))
        }
        (None, Some(synth)) => {
            let mut cfg = synth_config(synth)?;
            if let Some(seed) = src.seed {
                cfg.seed = seed;
            }
            cfg.validate()?;
            let counts = synth_generate(&cfg)?;
            Ok((Source::Synth(cfg), counts))
        }
        _ => Err(CliError::Config(
            "exactly one of --input and --synth is required".into(),
        )),
    }
}

fn synth_config(name: &str) -> CliResult<SynthConfig> {
    if name == "default" {
        return Ok(SynthConfig::default());
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "--synth expects `default` or a JSON config file, got `{name}`"
        )));
    }
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub(crate) fn spectrum_options(a: &args::AnalysisArgs) -> CliResult<SpectrumOptions> {
    if !(a.prominence_factor > 0.0 && a.prominence_factor.is_finite()) {
        return Err(CliError::Config(format!(
            "--prominence-factor must be positive, got {}",
            a.prominence_factor
        )));
    }
    if a.top_periods == 0 {
        return Err(CliError::Config("--top-periods must be at least 1".into()));
    }
    Ok(SpectrumOptions {
        detrend: a.detrend.into(),
        taper: if a.hann { Taper::Hann } else { Taper::Rectangular },
        prominence_factor: a.prominence_factor,
    })
}

/// Explicit positions, or 1, N/2 and N-1 of the sorted spectrum.
pub fn watch_positions(requested: Option<&[usize]>, n: usize) -> CliResult<Vec<usize>> {
    let positions = match requested {
        Some(p) => p.to_vec(),
        None => {
            let mut p = vec![1, n / 2, n - 1];
            p.dedup();
            p
        }
    };
    if let Some(&bad) = positions.iter().find(|&&p| p >= n) {
        return Err(CliError::Config(format!(
            "watch position {bad} out of range for {n} series"
        )));
    }
    Ok(positions)
}
