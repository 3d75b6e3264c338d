use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use lagspec_core::format::fmt_f64;
use lagspec_core::strobo::TrajectoryReport;
use lagspec_core::{
    characteristic_periods, lag_corr, power_spectrum, returns_from_counts, rmt_bounds, run_experiment,
    segment, sweep, trajectory, CharacteristicPeriod, EigenSystem, Error, ExperimentOptions, InjectionSpec,
    PowerSpectrum, ResonanceEntry, ResonanceThresholds, RmtBounds, SpectrumOptions, SpectrumSegmentation,
    StroboscopicSequence, Trajectory, TrajectoryKind,
};
use serde::Serialize;

use crate::args::{AnalyzeArgs, ExperimentArgs};
use crate::{
    io_err, json, load_source, spectrum_options, watch_positions, CliError, CliResult, PipelineConfig,
};

const KINDS: [TrajectoryKind; 2] = [TrajectoryKind::Eigenvalue, TrajectoryKind::Ipr];

fn write_file<F>(dir: &Path, name: &str, body: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> lagspec_core::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(io_err(&path))
}

fn write_json_file<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<()> {
    write_file(dir, name, |w| Ok(json::write_json(w, value)?))
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn segment_label(seg: &SpectrumSegmentation, k: usize) -> &'static str {
    if seg.left.contains(&k) {
        "left"
    } else if seg.right.contains(&k) {
        "right"
    } else {
        "random"
    }
}

fn write_equal_time<W: Write>(
    mut w: W,
    eigs: &EigenSystem,
    seg: &SpectrumSegmentation,
) -> lagspec_core::Result<()> {
    writeln!(w, "position,eigenvalue,ipr,segment")?;
    for k in 0..eigs.n() {
        writeln!(
            w,
            "{k},{},{},{}",
            fmt_f64(eigs.eigenvalues()[k]),
            fmt_f64(eigs.iprs()[k]),
            segment_label(seg, k)
        )?;
    }
    Ok(())
}

/// Spectra need a minimum trajectory length; shorter sweeps report none.
fn spectrum_if_long_enough(
    traj: &Trajectory,
    opts: &SpectrumOptions,
) -> lagspec_core::Result<Option<PowerSpectrum>> {
    match power_spectrum(traj, opts) {
        Ok(s) => Ok(Some(s)),
        Err(Error::TooShort { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Serialize)]
struct PeriodSummary {
    period_steps: f64,
    period_seconds: f64,
    frequency: f64,
    power: f64,
    prominence: f64,
}

fn period_summaries(
    spec: &PowerSpectrum,
    top: usize,
    delta_t: f64,
) -> lagspec_core::Result<Vec<PeriodSummary>> {
    Ok(characteristic_periods(spec, top)?
        .into_iter()
        .map(|c: CharacteristicPeriod| PeriodSummary {
            period_steps: c.period_steps,
            period_seconds: c.period_steps * delta_t,
            frequency: c.frequency,
            power: c.power,
            prominence: c.prominence,
        })
        .collect())
}

#[derive(Serialize)]
struct SegmentSizes {
    left: usize,
    random: usize,
    right: usize,
}

impl From<&SpectrumSegmentation> for SegmentSizes {
    fn from(s: &SpectrumSegmentation) -> Self {
        Self {
            left: s.left.len(),
            random: s.random.len(),
            right: s.right.len(),
        }
    }
}

#[derive(Serialize)]
struct EqualTimeReport<'a> {
    eigenvalues: &'a [f64],
    iprs: &'a [f64],
    bounds: RmtBounds,
    segmentation: &'a SpectrumSegmentation,
}

#[derive(Serialize)]
struct WatchSummary {
    position: usize,
    kind: TrajectoryKind,
    characteristic_periods: Vec<PeriodSummary>,
}

#[derive(Serialize)]
struct AnalyzeSummary {
    generated_unix: u64,
    n_series: usize,
    series_len: usize,
    delta_t: f64,
    tau_max: usize,
    equal_time_only: bool,
    rmt_bounds: RmtBounds,
    segment_sizes: SegmentSizes,
    watches: Vec<WatchSummary>,
}

#[derive(Serialize)]
struct WatchDetail {
    #[serde(flatten)]
    report: TrajectoryReport,
    variance: f64,
    noise_floor: Option<f64>,
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    series_ids: &'a [String],
    delta_t: f64,
    equal_time: EqualTimeReport<'a>,
    lags: &'a [usize],
    traces: &'a [f64],
    largest_eigenvalue: Vec<f64>,
    watches: Vec<WatchDetail>,
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub(crate) fn analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let a = &args.analysis;
    let spectrum = spectrum_options(a)?;
    let (source, counts) = load_source(&args.source)?;
    let n = counts.n_series();
    let watch = watch_positions(a.watch.as_deref(), n)?;
    let g = returns_from_counts(&counts)?;
    let seq = sweep(&g, a.tau_max)?;
    let bounds = rmt_bounds(n, g.len())?;
    let seg = segment(seq.equal_time(), &bounds);
    let delta_t = counts.interval();

    let config = PipelineConfig {
        command: "analyze",
        source,
        epsilon_clamp: args.source.epsilon_clamp,
        tau_max: a.tau_max,
        watch_positions: watch.clone(),
        spectrum,
        top_periods: a.top_periods,
        thresholds: None,
        injection: None,
        seed: args.source.seed,
    };

    let out = &a.out;
    prepare_dir(out)?;
    write_json_file(out, "config.json", &config)?;
    write_file(out, "equal_time.csv", |w| {
        write_equal_time(w, seq.equal_time(), &seg)
    })?;

    let mut summaries = Vec::new();
    let mut details = Vec::new();
    if a.tau_max > 0 {
        for &position in &watch {
            for kind in KINDS {
                let traj = trajectory(&seq, kind, position)?;
                let stem = format!("{}_{position}", kind.as_str());
                write_file(out, &format!("trajectory_{stem}.csv"), |w| traj.write_csv(w))?;
                let spec = spectrum_if_long_enough(&traj, &spectrum)?;
                let (periods, report, floor) = match &spec {
                    Some(s) => {
                        write_file(out, &format!("spectrum_{stem}.csv"), |w| s.write_csv(w))?;
                        (
                            period_summaries(s, a.top_periods, delta_t)?,
                            TrajectoryReport::new(&traj, s, delta_t),
                            Some(s.noise_floor),
                        )
                    }
                    None => (
                        Vec::new(),
                        TrajectoryReport {
                            position,
                            kind,
                            peaks: Vec::new(),
                        },
                        None,
                    ),
                };
                summaries.push(WatchSummary {
                    position,
                    kind,
                    characteristic_periods: periods,
                });
                details.push(WatchDetail {
                    report,
                    variance: traj.variance(),
                    noise_floor: floor,
                });
            }
        }
    }

    if a.dump_matrix {
        for &lag in seq.lags() {
            let d = lag_corr(&g, lag)?;
            write_file(out, &format!("matrix_lag_{lag}.csv"), |w| d.write_csv(w))?;
        }
    }

    let report = AnalyzeReport {
        series_ids: counts.series_ids(),
        delta_t,
        equal_time: EqualTimeReport {
            eigenvalues: seq.equal_time().eigenvalues(),
            iprs: seq.equal_time().iprs(),
            bounds,
            segmentation: &seg,
        },
        lags: seq.lags(),
        traces: seq.traces(),
        largest_eigenvalue: largest_eigenvalues(&seq),
        watches: details,
    };
    write_json_file(out, "report.json", &report)?;

    let summary = AnalyzeSummary {
        generated_unix: unix_now(),
        n_series: n,
        series_len: g.len(),
        delta_t,
        tau_max: a.tau_max,
        equal_time_only: a.tau_max == 0,
        rmt_bounds: bounds,
        segment_sizes: (&seg).into(),
        watches: summaries,
    };
    write_json_file(out, "summary.json", &summary)
}

fn largest_eigenvalues(seq: &StroboscopicSequence) -> Vec<f64> {
    seq.systems()
        .iter()
        .map(|s| s.eigenvalues().last().copied().unwrap_or(f64::NAN))
        .collect()
}

#[derive(Serialize)]
struct ResonanceJson<'a> {
    position: usize,
    kind: TrajectoryKind,
    probe_periods: &'a [f64],
    entries: &'a [ResonanceEntry],
}

#[derive(Serialize)]
struct ExperimentWatchSummary<'a> {
    position: usize,
    kind: TrajectoryKind,
    periods_before: Vec<PeriodSummary>,
    periods_after: Vec<PeriodSummary>,
    resonance: &'a [ResonanceEntry],
}

#[derive(Serialize)]
struct ExperimentSummary<'a> {
    generated_unix: u64,
    n_series: usize,
    series_len: usize,
    delta_t: f64,
    tau_max: usize,
    target_ids: &'a [String],
    random_segment_variance_ratio: f64,
    watches: Vec<ExperimentWatchSummary<'a>>,
}

fn read_injection(path: &Path) -> CliResult<InjectionSpec> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub(crate) fn experiment(args: &ExperimentArgs) -> CliResult<()> {
    let a = &args.analysis;
    let spectrum = spectrum_options(a)?;
    if !(args.suppressed > 0.0 && args.suppressed < args.enhanced && args.enhanced.is_finite()) {
        return Err(CliError::Config(format!(
            "thresholds need 0 < suppressed < enhanced, got {} and {}",
            args.suppressed, args.enhanced
        )));
    }
    let thresholds = ResonanceThresholds {
        enhanced: args.enhanced,
        suppressed: args.suppressed,
    };
    let mut spec = read_injection(&args.inject)?;
    if let Some(seed) = args.source.seed {
        spec.seed = seed;
    }
    let (source, counts) = load_source(&args.source)?;
    let n = counts.n_series();
    let watch = watch_positions(a.watch.as_deref(), n)?;
    let options = ExperimentOptions {
        spectrum,
        thresholds,
        kinds: KINDS.to_vec(),
        top_periods: a.top_periods,
    };
    let report = run_experiment(&counts, &spec, a.tau_max, &watch, &options)?;
    let delta_t = counts.interval();

    let config = PipelineConfig {
        command: "experiment",
        source,
        epsilon_clamp: args.source.epsilon_clamp,
        tau_max: a.tau_max,
        watch_positions: watch,
        spectrum,
        top_periods: a.top_periods,
        thresholds: Some(thresholds),
        injection: Some(spec),
        seed: args.source.seed,
    };

    let out = &a.out;
    prepare_dir(out)?;
    write_json_file(out, "config.json", &config)?;
    let len = report.before.series_len();
    let bounds = rmt_bounds(n, len)?;
    for (label, seq) in [("before", &report.before), ("after", &report.after)] {
        let seg = segment(seq.equal_time(), &bounds);
        let name = if label == "before" {
            "equal_time.csv".to_string()
        } else {
            "equal_time_after.csv".to_string()
        };
        write_file(out, &name, |w| write_equal_time(w, seq.equal_time(), &seg))?;
    }

    let mut resonance = Vec::new();
    let mut watches = Vec::new();
    for w in &report.watches {
        let stem = format!("{}_{}", w.kind.as_str(), w.position);
        for (label, side) in [("before", &w.before), ("after", &w.after)] {
            write_file(out, &format!("trajectory_{stem}_{label}.csv"), |f| {
                side.trajectory.write_csv(f)
            })?;
            write_file(out, &format!("spectrum_{stem}_{label}.csv"), |f| {
                side.spectrum.write_csv(f)
            })?;
        }
        resonance.push(ResonanceJson {
            position: w.position,
            kind: w.kind,
            probe_periods: &w.probe_periods,
            entries: &w.resonance.entries,
        });
        watches.push(ExperimentWatchSummary {
            position: w.position,
            kind: w.kind,
            periods_before: period_summaries(&w.before.spectrum, a.top_periods, delta_t)?,
            periods_after: period_summaries(&w.after.spectrum, a.top_periods, delta_t)?,
            resonance: &w.resonance.entries,
        });
    }
    write_json_file(out, "resonance.json", &resonance)?;
    write_json_file(out, "report.json", &report)?;

    let summary = ExperimentSummary {
        generated_unix: unix_now(),
        n_series: n,
        series_len: len,
        delta_t,
        tau_max: a.tau_max,
        target_ids: &report.injection.target_ids,
        random_segment_variance_ratio: report.random_segment_variance_ratio,
        watches,
    };
    write_json_file(out, "summary.json", &summary)
}
