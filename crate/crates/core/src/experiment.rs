//! Synthetic traffic with planted lead-lag oscillations, noise-like and
//! periodic injections, and before/after experiment orchestration.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::eigensys::{eigendecompose, rmt_bounds, segment, EigenSystem, SpectrumSegmentation};
use crate::error::{Error, Result};
use crate::ingest::{median, returns_from_counts, CountMatrix};
use crate::lagcorr::equal_time_corr;
use crate::strobo::{
    characteristic_periods, compare_spectra, power_spectrum, sweep, trajectory, PowerSpectrum,
    ResonanceReport, ResonanceThresholds, SpectrumOptions, StroboscopicSequence, Trajectory, TrajectoryKind,
};

fn default_volatility() -> f64 {
    0.1
}

fn default_reversion() -> f64 {
    0.02
}

/// Parameters of the synthetic traffic generator.
///
/// Background series follow a mean-reverting log level, so their rate changes
/// are close to i.i.d. Gaussian. The first `n_drivers` series share the signal
/// `s(t) = Σ_p cos(2πt/p)` over `driver_periods`, each delayed by its entry in
/// `driver_lags` and mixed with independent noise according to `coupling`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_series: usize,
    /// Number of count samples, `L + 1`.
    pub length: usize,
    /// Sampling interval in seconds.
    pub delta_t: f64,
    pub n_drivers: usize,
    /// Periods of the shared driver signal, in lag steps.
    pub driver_periods: Vec<usize>,
    /// Per-driver delay in lag steps; empty means all zero.
    #[serde(default)]
    pub driver_lags: Vec<usize>,
    /// Weight of the shared signal against the driver's own noise, in (0, 1].
    pub coupling: f64,
    /// Typical count level.
    pub baseline: f64,
    pub seed: u64,
    /// Standard deviation of the per-step log-rate innovations.
    #[serde(default = "default_volatility")]
    pub volatility: f64,
    /// Pull of background log levels back towards the baseline per step.
    #[serde(default = "default_reversion")]
    pub reversion: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_series: 64,
            length: 2049,
            delta_t: 300.0,
            n_drivers: 4,
            driver_periods: vec![3, 6],
            driver_lags: vec![0; 4],
            coupling: 0.9,
            baseline: 1e6,
            seed: 0,
            volatility: default_volatility(),
            reversion: default_reversion(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.n_series < 2 {
            return fail(format!("n_series must be at least 2, got {}", self.n_series));
        }
        if self.length < 3 {
            return fail(format!("length must be at least 3, got {}", self.length));
        }
        if self.n_drivers > self.n_series {
            return fail(format!(
                "n_drivers ({}) exceeds n_series ({})",
                self.n_drivers, self.n_series
            ));
        }
        if let Some(p) = self.driver_periods.iter().find(|&&p| p < 2) {
            return fail(format!("driver period {p} is below 2 steps"));
        }
        if self.n_drivers > 0 && self.driver_periods.is_empty() {
            return fail("drivers need at least one period".into());
        }
        if !self.driver_lags.is_empty() && self.driver_lags.len() != self.n_drivers {
            return fail(format!(
                "{} driver lags for {} drivers",
                self.driver_lags.len(),
                self.n_drivers
            ));
        }
        if !(self.coupling > 0.0 && self.coupling <= 1.0) {
            return fail(format!("coupling must lie in (0, 1], got {}", self.coupling));
        }
        if !(self.baseline > 0.0 && self.baseline.is_finite()) {
            return fail(format!("baseline must be positive, got {}", self.baseline));
        }
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return fail(format!("delta_t must be positive, got {}", self.delta_t));
        }
        if !(self.volatility > 0.0 && self.volatility.is_finite()) {
            return fail(format!("volatility must be positive, got {}", self.volatility));
        }
        if !(0.0..1.0).contains(&self.reversion) {
            return fail(format!("reversion must lie in [0, 1), got {}", self.reversion));
        }
        Ok(())
    }

    /// Labels of the driver series, which come first.
    pub fn driver_ids(&self) -> Vec<String> {
        (0..self.n_drivers)
            .map(|i| series_label(i, self.n_series))
            .collect()
    }
}

fn series_label(i: usize, n: usize) -> String {
    let width = (n.saturating_sub(1)).to_string().len().max(3);
    format!("s{i:0width$}")
}

/// Generates a count matrix; equal configs give bit-identical output.
pub fn synth_generate(cfg: &SynthConfig) -> Result<CountMatrix> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let steps = cfg.length - 1;
    let mut counts = Vec::with_capacity(cfg.n_series);

    for i in 0..cfg.n_series {
        let mut level = 0.0;
        let mut row = Vec::with_capacity(cfg.length);
        row.push(cfg.baseline);
        if i < cfg.n_drivers {
            let lag = cfg.driver_lags.get(i).copied().unwrap_or(0) as f64;
            for t in 0..steps {
                let shift = t as f64 - lag;
                let signal: f64 = cfg
                    .driver_periods
                    .iter()
                    .map(|&p| (2.0 * PI * shift / p as f64).cos())
                    .sum();
                let noise: f64 = StandardNormal.sample(&mut rng);
                level += cfg.volatility * (cfg.coupling * signal + (1.0 - cfg.coupling) * noise);
                row.push(cfg.baseline * level.exp());
            }
        } else {
            for _ in 0..steps {
                let noise: f64 = StandardNormal.sample(&mut rng);
                level = (1.0 - cfg.reversion) * level + cfg.volatility * noise;
                row.push(cfg.baseline * level.exp());
            }
        }
        counts.push(row);
    }

    let ids = (0..cfg.n_series).map(|i| series_label(i, cfg.n_series)).collect();
    CountMatrix::new(ids, cfg.delta_t, counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InjectionKind {
    /// Samples replaced by uniform draws over the series' observed range.
    Noise,
    /// Samples replaced by `median * (1 + depth * cos(2π t Δt / period))`.
    Periodic {
        /// Period in seconds.
        period: f64,
        modulation_depth: f64,
    },
}

/// Which series to overwrite, over which window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    #[serde(flatten)]
    pub kind: InjectionKind,
    #[serde(default)]
    pub target_ids: Vec<String>,
    /// When `target_ids` is empty, pick this many targets automatically:
    /// the most correlated series for noise, random-segment series for
    /// periodic injections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_targets: Option<usize>,
    /// First injected sample index; defaults to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<usize>,
    /// One past the last injected sample; defaults to the record length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl InjectionSpec {
    pub fn noise(target_ids: Vec<String>, seed: u64) -> Self {
        Self {
            kind: InjectionKind::Noise,
            target_ids,
            auto_targets: None,
            t_start: None,
            t_end: None,
            seed,
        }
    }

    pub fn periodic(target_ids: Vec<String>, period: f64, modulation_depth: f64, seed: u64) -> Self {
        Self {
            kind: InjectionKind::Periodic {
                period,
                modulation_depth,
            },
            target_ids,
            auto_targets: None,
            t_start: None,
            t_end: None,
            seed,
        }
    }

    /// Injection period in lag steps, for periodic injections.
    pub fn period_steps(&self, delta_t: f64) -> Option<f64> {
        match self.kind {
            InjectionKind::Periodic { period, .. } => Some(period / delta_t),
            InjectionKind::Noise => None,
        }
    }
}

/// Automatic target choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSelection {
    /// Series loading most heavily on the right-segment eigenvectors of D(0).
    Strongest(usize),
    /// A seeded random draw among series that load only weakly on the
    /// non-random eigenvectors of D(0).
    RandomSegment(usize),
}

/// Equal-time eigen analysis used for target selection.
fn equal_time_segments(counts: &CountMatrix) -> Result<(EigenSystem, SpectrumSegmentation)> {
    let g = returns_from_counts(counts)?;
    let d = equal_time_corr(&g)?;
    let eigs = eigendecompose(&d)?;
    let bounds = rmt_bounds(d.n(), d.effective_length())?;
    let seg = segment(&eigs, &bounds);
    Ok((eigs, seg))
}

pub fn select_targets(counts: &CountMatrix, selection: TargetSelection, seed: u64) -> Result<Vec<String>> {
    let (eigs, seg) = equal_time_segments(counts)?;
    let n = counts.n_series();
    let ids = counts.series_ids();
    match selection {
        TargetSelection::Strongest(k) => {
            if k > n {
                return Err(Error::ConfigInvalid(format!("cannot select {k} of {n} series")));
            }
            let right = if seg.right.is_empty() {
                vec![n - 1]
            } else {
                seg.right
            };
            let loadings = eigs.series_loadings(&right);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| loadings[b].total_cmp(&loadings[a]).then(a.cmp(&b)));
            let mut chosen: Vec<usize> = order.into_iter().take(k).collect();
            chosen.sort_unstable();
            Ok(chosen.into_iter().map(|i| ids[i].clone()).collect())
        }
        TargetSelection::RandomSegment(k) => {
            let non_random = seg.non_random();
            let loadings = eigs.series_loadings(&non_random);
            let typical = non_random.len() as f64 / n as f64;
            let mut candidates: Vec<usize> = (0..n).filter(|&i| loadings[i] <= typical).collect();
            if candidates.len() < k {
                return Err(Error::ConfigInvalid(format!(
                    "only {} random-segment series available, {k} requested",
                    candidates.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            candidates.shuffle(&mut rng);
            let mut chosen: Vec<usize> = candidates.into_iter().take(k).collect();
            chosen.sort_unstable();
            Ok(chosen.into_iter().map(|i| ids[i].clone()).collect())
        }
    }
}

/// Explicit targets, or the automatic choice when only `auto_targets` is set.
pub fn resolve_targets(counts: &CountMatrix, spec: &InjectionSpec) -> Result<Vec<String>> {
    match (spec.target_ids.is_empty(), spec.auto_targets) {
        (true, Some(k)) => {
            let selection = match spec.kind {
                InjectionKind::Noise => TargetSelection::Strongest(k),
                InjectionKind::Periodic { .. } => TargetSelection::RandomSegment(k),
            };
            select_targets(counts, selection, spec.seed)
        }
        _ => Ok(spec.target_ids.clone()),
    }
}

/// Returns a copy of `counts` with the target series overwritten inside the
/// injection window. Other series are left bit-identical.
pub fn inject(counts: &CountMatrix, spec: &InjectionSpec) -> Result<CountMatrix> {
    let targets = resolve_targets(counts, spec)?;
    inject_into(counts, spec, &targets)
}

fn inject_into(counts: &CountMatrix, spec: &InjectionSpec, targets: &[String]) -> Result<CountMatrix> {
    let len = counts.len();
    let start = spec.t_start.unwrap_or(0);
    let end = spec.t_end.unwrap_or(len);
    if start >= end || end > len {
        return Err(Error::WindowOutOfRange { start, end, len });
    }
    let indices = targets
        .iter()
        .map(|id| {
            counts
                .index_of(id)
                .ok_or_else(|| Error::UnknownSeries(id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let delta_t = counts.interval();
    if let InjectionKind::Periodic {
        period,
        modulation_depth,
    } = spec.kind
    {
        if !(modulation_depth > 0.0 && modulation_depth < 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "modulation depth must lie in (0, 1), got {modulation_depth}"
            )));
        }
        if !(period >= 2.0 * delta_t) || !period.is_finite() {
            return Err(Error::ConfigInvalid(format!(
                "period {period} s is shorter than two sampling intervals ({delta_t} s each)"
            )));
        }
    }

    let (ids, interval, mut rows) = counts.clone().into_parts();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for &i in &indices {
        let row = &mut rows[i];
        match spec.kind {
            InjectionKind::Noise => {
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for v in &mut row[start..end] {
                    *v = rng.random_range(lo..=hi);
                }
            }
            InjectionKind::Periodic {
                period,
                modulation_depth,
            } => {
                let level = median(&mut row.clone());
                for (t, v) in row.iter_mut().enumerate().take(end).skip(start) {
                    let phase = 2.0 * PI * t as f64 * delta_t / period;
                    *v = level * (1.0 + modulation_depth * phase.cos());
                }
            }
        }
    }
    CountMatrix::new(ids, interval, rows)
}

/// Analysis settings shared by experiments and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub spectrum: SpectrumOptions,
    pub thresholds: ResonanceThresholds,
    pub kinds: Vec<TrajectoryKind>,
    /// Number of pre-injection characteristic periods to probe.
    pub top_periods: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            spectrum: SpectrumOptions::default(),
            thresholds: ResonanceThresholds::default(),
            kinds: vec![TrajectoryKind::Eigenvalue, TrajectoryKind::Ipr],
            top_periods: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzedTrajectory {
    pub trajectory: Trajectory,
    pub spectrum: PowerSpectrum,
}

impl AnalyzedTrajectory {
    pub fn new(
        seq: &StroboscopicSequence,
        kind: TrajectoryKind,
        position: usize,
        options: &SpectrumOptions,
    ) -> Result<Self> {
        let trajectory = trajectory(seq, kind, position)?;
        let spectrum = power_spectrum(&trajectory, options)?;
        Ok(Self { trajectory, spectrum })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WatchReport {
    pub position: usize,
    pub kind: TrajectoryKind,
    pub before: AnalyzedTrajectory,
    pub after: AnalyzedTrajectory,
    /// Pre-injection characteristic periods, then the injection period. A
    /// characteristic period falling in the injection bin is dropped.
    pub probe_periods: Vec<f64>,
    pub resonance: ResonanceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    /// The injection as applied, with targets resolved.
    pub injection: InjectionSpec,
    pub tau_max: usize,
    pub delta_t: f64,
    pub watches: Vec<WatchReport>,
    /// Median over equal-time random-segment positions of the eigenvalue
    /// trajectory variance after / before.
    pub random_segment_variance_ratio: f64,
    #[serde(skip)]
    pub before: StroboscopicSequence,
    #[serde(skip)]
    pub after: StroboscopicSequence,
}

impl ExperimentReport {
    pub fn watch(&self, position: usize, kind: TrajectoryKind) -> Option<&WatchReport> {
        self.watches
            .iter()
            .find(|w| w.position == position && w.kind == kind)
    }
}

/// Sweeps the original and the injected data and compares the spectra of
/// every watched trajectory.
pub fn run_experiment(
    counts: &CountMatrix,
    spec: &InjectionSpec,
    tau_max: usize,
    watch_positions: &[usize],
    options: &ExperimentOptions,
) -> Result<ExperimentReport> {
    let targets = resolve_targets(counts, spec)?;
    let injected = inject_into(counts, spec, &targets)?;
    let n = counts.n_series();
    if let Some(&position) = watch_positions.iter().find(|&&p| p >= n) {
        return Err(Error::IndexOutOfRange { position, n });
    }

    let (before, after) = rayon::join(
        || returns_from_counts(counts).and_then(|g| sweep(&g, tau_max)),
        || returns_from_counts(&injected).and_then(|g| sweep(&g, tau_max)),
    );
    let (before, after) = (before?, after?);

    let delta_t = counts.interval();
    let injection_period = spec.period_steps(delta_t);
    let mut watches = Vec::new();
    for &position in watch_positions {
        for &kind in &options.kinds {
            let b = AnalyzedTrajectory::new(&before, kind, position, &options.spectrum)?;
            let a = AnalyzedTrajectory::new(&after, kind, position, &options.spectrum)?;
            let injection_bin = injection_period.map(|p| b.spectrum.nearest_bin(p));
            let mut probe_periods: Vec<f64> =
                characteristic_periods(&b.spectrum, options.top_periods.max(1))?
                    .into_iter()
                    .map(|c| c.period_steps)
                    .filter(|&q| Some(b.spectrum.nearest_bin(q)) != injection_bin)
                    .collect();
            probe_periods.extend(injection_period);
            let resonance = compare_spectra(&b.spectrum, &a.spectrum, &probe_periods, &options.thresholds)?;
            watches.push(WatchReport {
                position,
                kind,
                before: b,
                after: a,
                probe_periods,
                resonance,
            });
        }
    }

    let random_segment_variance_ratio = random_segment_variance_ratio(&before, &after)?;
    let mut injection = spec.clone();
    injection.target_ids = targets;
    injection.auto_targets = None;
    Ok(ExperimentReport {
        injection,
        tau_max,
        delta_t,
        watches,
        random_segment_variance_ratio,
        before,
        after,
    })
}

/// Median variance ratio of eigenvalue trajectories over the positions that
/// sit inside the Marchenko-Pastur interval at `τ = 0` in `before`.
pub fn random_segment_variance_ratio(
    before: &StroboscopicSequence,
    after: &StroboscopicSequence,
) -> Result<f64> {
    let bounds = rmt_bounds(before.n(), before.series_len())?;
    let seg = segment(before.equal_time(), &bounds);
    let mut ratios: Vec<f64> = seg
        .random
        .iter()
        .filter_map(|&k| {
            let vb = trajectory(before, TrajectoryKind::Eigenvalue, k).ok()?.variance();
            let va = trajectory(after, TrajectoryKind::Eigenvalue, k).ok()?.variance();
            (vb > 0.0).then(|| va / vb)
        })
        .collect();
    if ratios.is_empty() {
        return Ok(1.0);
    }
    Ok(median(&mut ratios))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strobo::PeakChange;

    fn small_config(seed: u64) -> SynthConfig {
        SynthConfig {
            n_series: 12,
            length: 257,
            n_drivers: 3,
            driver_lags: vec![],
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn equal_seeds_give_identical_output() {
        let a = synth_generate(&small_config(9)).unwrap();
        let b = synth_generate(&small_config(9)).unwrap();
        for (x, y) in a.rows().iter().zip(b.rows()) {
            for (p, q) in x.iter().zip(y) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
        let c = synth_generate(&small_config(10)).unwrap();
        assert_ne!(a.rows(), c.rows());
    }

    #[test]
    fn labels_are_padded() {
        let counts = synth_generate(&small_config(0)).unwrap();
        assert_eq!(counts.series_ids()[0], "s000");
        assert_eq!(counts.series_ids()[11], "s011");
        assert_eq!(small_config(0).driver_ids(), vec!["s000", "s001", "s002"]);
        assert_eq!(series_label(7, 5000), "s0007");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SynthConfig {
                n_drivers: 20,
                ..small_config(0)
            },
            SynthConfig {
                driver_periods: vec![3, 1],
                ..small_config(0)
            },
            SynthConfig {
                coupling: 0.0,
                ..small_config(0)
            },
            SynthConfig {
                coupling: 1.5,
                ..small_config(0)
            },
            SynthConfig {
                driver_lags: vec![1],
                ..small_config(0)
            },
            SynthConfig {
                baseline: -1.0,
                ..small_config(0)
            },
            SynthConfig {
                n_series: 1,
                n_drivers: 0,
                ..small_config(0)
            },
        ];
        for cfg in bad {
            assert!(
                matches!(synth_generate(&cfg), Err(Error::ConfigInvalid(_))),
                "{cfg:?}"
            );
        }
    }

    #[test]
    fn config_json_round_trip_and_defaults() {
        let cfg = SynthConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SynthConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        let minimal = r#"{"n_series":8,"length":65,"delta_t":300,"n_drivers":2,
            "driver_periods":[3],"coupling":0.5,"baseline":100,"seed":1}"#;
        let parsed: SynthConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(parsed.volatility, 0.1);
        assert!(parsed.driver_lags.is_empty());
        synth_generate(&parsed).unwrap();
    }

    #[test]
    fn injection_spec_json_shape() {
        let spec: InjectionSpec = serde_json::from_str(
            r#"{"kind":"periodic","period":900,"modulation_depth":0.5,"target_ids":["s001"],"seed":3}"#,
        )
        .unwrap();
        assert_eq!(spec, InjectionSpec::periodic(vec!["s001".into()], 900.0, 0.5, 3));
        assert_eq!(spec.period_steps(300.0), Some(3.0));
        let noise: InjectionSpec = serde_json::from_str(r#"{"kind":"noise","auto_targets":4}"#).unwrap();
        assert_eq!(noise.kind, InjectionKind::Noise);
        assert_eq!(noise.auto_targets, Some(4));
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<InjectionSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn empty_target_list_is_identity() {
        let counts = synth_generate(&small_config(1)).unwrap();
        let out = inject(&counts, &InjectionSpec::noise(vec![], 5)).unwrap();
        assert_eq!(out, counts);
    }

    #[test]
    fn periodic_injection_cycles_every_three_samples() {
        let counts = synth_generate(&small_config(2)).unwrap();
        let spec = InjectionSpec::periodic(vec!["s005".into()], 900.0, 0.5, 0);
        let out = inject(&counts, &spec).unwrap();
        let row = out.row(5);
        let level = median(&mut counts.row(5).to_vec());
        for t in 0..row.len() - 3 {
            assert!((row[t] - row[t + 3]).abs() <= 1e-9 * level);
        }
        assert!((row[0] - 1.5 * level).abs() <= 1e-9 * level);
        assert!((row[1] - 0.75 * level).abs() <= 1e-9 * level);
    }

    #[test]
    fn injection_spares_other_series_and_stays_positive() {
        let counts = synth_generate(&small_config(3)).unwrap();
        let targets = vec!["s000".to_string(), "s004".to_string()];
        for spec in [
            InjectionSpec::noise(targets.clone(), 11),
            InjectionSpec::periodic(targets.clone(), 1200.0, 0.9, 11),
        ] {
            let spec = InjectionSpec {
                t_start: Some(40),
                t_end: Some(200),
                ..spec
            };
            let out = inject(&counts, &spec).unwrap();
            for i in 0..counts.n_series() {
                let before = counts.row(i);
                let after = out.row(i);
                assert!(after.iter().all(|&v| v > 0.0));
                if i == 0 || i == 4 {
                    assert_eq!(&before[..40], &after[..40]);
                    assert_eq!(&before[200..], &after[200..]);
                    assert_ne!(&before[40..200], &after[40..200]);
                } else {
                    assert!(before.iter().zip(after).all(|(a, b)| a.to_bits() == b.to_bits()));
                }
            }
        }
    }

    #[test]
    fn noise_stays_within_original_range() {
        let counts = synth_generate(&small_config(4)).unwrap();
        let out = inject(&counts, &InjectionSpec::noise(vec!["s001".into()], 2)).unwrap();
        let lo = counts.row(1).iter().copied().fold(f64::INFINITY, f64::min);
        let hi = counts.row(1).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(out.row(1).iter().all(|&v| (lo..=hi).contains(&v)));
    }

    #[test]
    fn injection_errors() {
        let counts = synth_generate(&small_config(5)).unwrap();
        let unknown = InjectionSpec::noise(vec!["nope".into()], 0);
        assert!(matches!(inject(&counts, &unknown), Err(Error::UnknownSeries(id)) if id == "nope"));

        let window = InjectionSpec {
            t_start: Some(10),
            t_end: Some(300),
            ..InjectionSpec::noise(vec!["s000".into()], 0)
        };
        assert!(matches!(
            inject(&counts, &window),
            Err(Error::WindowOutOfRange {
                start: 10,
                end: 300,
                len: 257
            })
        ));
        let empty = InjectionSpec {
            t_start: Some(10),
            t_end: Some(10),
            ..InjectionSpec::noise(vec!["s000".into()], 0)
        };
        assert!(matches!(
            inject(&counts, &empty),
            Err(Error::WindowOutOfRange { .. })
        ));

        for (period, depth) in [(900.0, 1.0), (900.0, 0.0), (500.0, 0.5)] {
            let spec = InjectionSpec::periodic(vec!["s000".into()], period, depth, 0);
            assert!(matches!(inject(&counts, &spec), Err(Error::ConfigInvalid(_))));
        }
    }

    #[test]
    fn strongest_targets_are_the_drivers() {
        let cfg = SynthConfig {
            n_series: 24,
            length: 1025,
            n_drivers: 4,
            seed: 6,
            ..SynthConfig::default()
        };
        let counts = synth_generate(&cfg).unwrap();
        let chosen = select_targets(&counts, TargetSelection::Strongest(4), 0).unwrap();
        assert_eq!(chosen, cfg.driver_ids());
        let auto = InjectionSpec {
            auto_targets: Some(4),
            ..InjectionSpec::noise(vec![], 0)
        };
        assert_eq!(resolve_targets(&counts, &auto).unwrap(), cfg.driver_ids());
    }

    #[test]
    fn random_segment_targets_avoid_drivers_and_follow_seed() {
        let cfg = SynthConfig {
            n_series: 24,
            length: 1025,
            n_drivers: 4,
            seed: 7,
            ..SynthConfig::default()
        };
        let counts = synth_generate(&cfg).unwrap();
        let a = select_targets(&counts, TargetSelection::RandomSegment(4), 1).unwrap();
        let b = select_targets(&counts, TargetSelection::RandomSegment(4), 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        let drivers = cfg.driver_ids();
        assert!(a.iter().all(|id| !drivers.contains(id)));
        assert!(matches!(
            select_targets(&counts, TargetSelection::RandomSegment(24), 1),
            Err(Error::ConfigInvalid(_))
        ));
    }

    #[test]
    fn zero_targets_leave_experiment_unchanged() {
        let counts = synth_generate(&small_config(8)).unwrap();
        let report = run_experiment(
            &counts,
            &InjectionSpec::noise(vec![], 0),
            12,
            &[0, 6, 11],
            &ExperimentOptions::default(),
        )
        .unwrap();
        assert_eq!(report.before, report.after);
        assert_eq!(report.watches.len(), 6);
        for w in &report.watches {
            assert_eq!(w.before, w.after);
            assert!(w
                .resonance
                .entries
                .iter()
                .all(|e| e.change == PeakChange::Unchanged));
        }
        assert_eq!(report.random_segment_variance_ratio, 1.0);
    }

    #[test]
    fn experiment_rejects_bad_watch_position() {
        let counts = synth_generate(&small_config(8)).unwrap();
        let err = run_experiment(
            &counts,
            &InjectionSpec::noise(vec![], 0),
            12,
            &[12],
            &ExperimentOptions::default(),
        );
        assert!(matches!(err, Err(Error::IndexOutOfRange { position: 12, n: 12 })));
    }

    #[test]
    fn experiment_is_deterministic() {
        let counts = synth_generate(&small_config(9)).unwrap();
        let spec = InjectionSpec::periodic(vec!["s003".into(), "s007".into()], 1200.0, 0.5, 4);
        let run = || {
            let r = run_experiment(&counts, &spec, 16, &[11], &ExperimentOptions::default()).unwrap();
            serde_json::to_string(&r).unwrap()
        };
        assert_eq!(run(), run());
    }
}
