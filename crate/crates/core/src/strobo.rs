//! Stroboscopic lag sweeps and frequency-domain analysis of eigenvalue and
//! IPR trajectories.
//!
//! A sweep eigen-decomposes `D(τ)` for every lag `τ = 0..=τ_max`. Eigenvalues
//! are tracked by their sorted position `k`, so `λ_k(τ)` is simply the `k`-th
//! smallest eigenvalue at lag `τ`. Trajectories drop the `τ = 0` point, which
//! carries the trivial self-correlation spike.
//!
//! The power spectrum of a trajectory of length `M` is `|X_f|²` of its
//! discrete Fourier transform on the one-sided grid `f = 0, 1/M, .., ⌊M/2⌋/M`
//! cycles per lag step, with no zero padding.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::eigensys::{eigendecompose, EigenSystem};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::ingest::{median, ReturnMatrix};
use crate::lagcorr::{lag_corr, max_lag};

/// Minimum trajectory length accepted by [`power_spectrum`].
pub const MIN_SPECTRUM_LEN: usize = 8;

/// One eigen system per lag, `τ = 0..=τ_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct StroboscopicSequence {
    lags: Vec<usize>,
    systems: Vec<EigenSystem>,
    traces: Vec<f64>,
    n: usize,
    series_len: usize,
    delta_t: f64,
}

impl StroboscopicSequence {
    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn systems(&self) -> &[EigenSystem] {
        &self.systems
    }

    pub fn system(&self, lag: usize) -> &EigenSystem {
        &self.systems[lag]
    }

    /// `trace(D(τ))` for every lag.
    pub fn traces(&self) -> &[f64] {
        &self.traces
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    /// Length `L` of the return series the sweep was built from.
    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn tau_max(&self) -> usize {
        self.lags.len() - 1
    }

    /// The equal-time system.
    pub fn equal_time(&self) -> &EigenSystem {
        &self.systems[0]
    }
}

/// Eigen-decomposes `D(τ)` for `τ = 0..=tau_max`, in parallel over lags.
pub fn sweep(g: &ReturnMatrix, tau_max: usize) -> Result<StroboscopicSequence> {
    let max = max_lag(g.len());
    if tau_max > max {
        return Err(Error::LagTooLarge { lag: tau_max, max });
    }
    let computed: Vec<(EigenSystem, f64)> = (0..=tau_max)
        .into_par_iter()
        .map(|lag| {
            let d = lag_corr(g, lag)?;
            Ok((eigendecompose(&d)?, d.trace()))
        })
        .collect::<Result<_>>()?;
    let (systems, traces) = computed.into_iter().unzip();
    Ok(StroboscopicSequence {
        lags: (0..=tau_max).collect(),
        systems,
        traces,
        n: g.n_series(),
        series_len: g.len(),
        delta_t: g.interval(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Eigenvalue,
    Ipr,
}

impl TrajectoryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrajectoryKind::Eigenvalue => "eigenvalue",
            TrajectoryKind::Ipr => "ipr",
        }
    }
}

/// An eigenvalue or IPR at one sorted spectral position, over `τ = 1..=τ_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub position: usize,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn new(kind: TrajectoryKind, position: usize, values: Vec<f64>) -> Self {
        Self {
            kind,
            position,
            values,
        }
    }

    /// Population variance of the values.
    pub fn variance(&self) -> f64 {
        let n = self.values.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let mean = self.values.iter().sum::<f64>() / n;
        self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
    }

    /// CSV with header `tau,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "tau,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, fmt_f64(*v))?;
        }
        Ok(())
    }
}

/// Extracts `λ_k(τ)` or `I_k(τ)` for `τ = 1..=τ_max`.
///
/// Position 0, the lowest eigenvalue, drifts secularly with `τ` and is left
/// out of default period reports; it can still be extracted here.
pub fn trajectory(seq: &StroboscopicSequence, kind: TrajectoryKind, position: usize) -> Result<Trajectory> {
    if position >= seq.n() {
        return Err(Error::IndexOutOfRange { position, n: seq.n() });
    }
    let values = seq.systems()[1..]
        .iter()
        .map(|s| match kind {
            TrajectoryKind::Eigenvalue => s.eigenvalues()[position],
            TrajectoryKind::Ipr => s.iprs()[position],
        })
        .collect();
    Ok(Trajectory::new(kind, position, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detrend {
    None,
    #[default]
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Taper {
    #[default]
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub detrend: Detrend,
    pub taper: Taper,
    /// A local maximum is a peak when its prominence exceeds this multiple of
    /// the median nonzero-frequency power.
    pub prominence_factor: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            detrend: Detrend::Mean,
            taper: Taper::Rectangular,
            prominence_factor: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub bin: usize,
    pub frequency: f64,
    pub power: f64,
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    /// Cycles per lag step.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    /// Detected peaks, tallest first.
    pub peaks: Vec<Peak>,
    /// Median of the nonzero-frequency power.
    pub noise_floor: f64,
    /// Length `M` of the transformed sequence.
    pub input_len: usize,
}

impl PowerSpectrum {
    /// Sum of `|X_f|²` over the full two-sided spectrum.
    pub fn two_sided_total(&self) -> f64 {
        let m = self.input_len;
        self.power
            .iter()
            .enumerate()
            .map(|(k, p)| {
                if k == 0 || (m.is_multiple_of(2) && k == m / 2) {
                    *p
                } else {
                    2.0 * p
                }
            })
            .sum()
    }

    /// Largest power in the bins within one bin of `1 / period`.
    pub fn power_near_period(&self, period_steps: f64) -> f64 {
        let (lo, hi) = self.bin_window(period_steps);
        self.power[lo..=hi].iter().copied().fold(0.0, f64::max)
    }

    /// Bin nearest to `1 / period`, clamped to the nonzero-frequency range.
    pub fn nearest_bin(&self, period_steps: f64) -> usize {
        let last = self.power.len() - 1;
        let center = (self.input_len as f64 / period_steps).round() as usize;
        center.clamp(1, last.max(1))
    }

    fn bin_window(&self, period_steps: f64) -> (usize, usize) {
        let last = self.power.len() - 1;
        let center = self.nearest_bin(period_steps);
        (center.saturating_sub(1).max(1).min(last), (center + 1).min(last))
    }

    /// Detected peak within one bin of `1 / period`, if any.
    pub fn peak_near_period(&self, period_steps: f64) -> Option<&Peak> {
        let center = self.nearest_bin(period_steps);
        self.peaks.iter().find(|p| p.bin.abs_diff(center) <= 1)
    }

    /// CSV with header `frequency,power`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "frequency,power")?;
        for (f, p) in self.frequencies.iter().zip(&self.power) {
            writeln!(out, "{},{}", fmt_f64(*f), fmt_f64(*p))?;
        }
        Ok(())
    }
}

/// Power spectrum of a trajectory with peak detection.
pub fn power_spectrum(traj: &Trajectory, options: &SpectrumOptions) -> Result<PowerSpectrum> {
    spectrum_of(&traj.values, options)
}

/// Power spectrum of an arbitrary real sequence.
pub fn spectrum_of(values: &[f64], options: &SpectrumOptions) -> Result<PowerSpectrum> {
    let m = values.len();
    if m < MIN_SPECTRUM_LEN {
        return Err(Error::TooShort {
            required: MIN_SPECTRUM_LEN,
            found: m,
        });
    }
    let prepared = prepare(values, options);
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(m);
    let mut buffer: Vec<Complex<f64>> = prepared.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fft.process(&mut buffer);

    let half = m / 2;
    let power: Vec<f64> = buffer[..=half].iter().map(|c| c.norm_sqr()).collect();
    let frequencies = (0..=half).map(|k| k as f64 / m as f64).collect();
    let mut nonzero = power[1..].to_vec();
    let noise_floor = median(&mut nonzero);
    let peaks = detect_peaks(&power, m, noise_floor * options.prominence_factor);
    Ok(PowerSpectrum {
        frequencies,
        power,
        peaks,
        noise_floor,
        input_len: m,
    })
}

/// Applies detrending then tapering, returning the sequence that is transformed.
pub fn prepare(values: &[f64], options: &SpectrumOptions) -> Vec<f64> {
    let m = values.len();
    let mean = match options.detrend {
        Detrend::None => 0.0,
        Detrend::Mean => values.iter().sum::<f64>() / m as f64,
    };
    values
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let w = match options.taper {
                Taper::Rectangular => 1.0,
                Taper::Hann => 0.5 * (1.0 - (2.0 * std::f64::consts::PI * t as f64 / (m - 1) as f64).cos()),
            };
            (v - mean) * w
        })
        .collect()
}

fn detect_peaks(power: &[f64], m: usize, threshold: f64) -> Vec<Peak> {
    let mut peaks: Vec<Peak> = (1..power.len().saturating_sub(1))
        .filter(|&i| power[i] > power[i - 1] && power[i] > power[i + 1])
        .filter_map(|i| {
            let prominence = prominence(power, i);
            (prominence > threshold).then(|| Peak {
                bin: i,
                frequency: i as f64 / m as f64,
                power: power[i],
                prominence,
            })
        })
        .collect();
    peaks.sort_by(|a, b| b.power.total_cmp(&a.power).then(a.bin.cmp(&b.bin)));
    peaks
}

/// Topographic prominence: height above the higher of the two lowest points
/// reached on each side before meeting taller terrain or the spectrum edge.
fn prominence(power: &[f64], i: usize) -> f64 {
    let h = power[i];
    let left_base = power[..i]
        .iter()
        .rev()
        .take_while(|&&p| p <= h)
        .copied()
        .fold(h, f64::min);
    let right_base = power[i + 1..]
        .iter()
        .take_while(|&&p| p <= h)
        .copied()
        .fold(h, f64::min);
    h - left_base.max(right_base)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPeriod {
    pub period_steps: f64,
    pub frequency: f64,
    pub power: f64,
    pub prominence: f64,
}

/// Periods (in lag steps) of the `top_n` tallest peaks, tallest first. A flat
/// spectrum yields an empty list.
pub fn characteristic_periods(spec: &PowerSpectrum, top_n: usize) -> Result<Vec<CharacteristicPeriod>> {
    if top_n == 0 {
        return Err(Error::ConfigInvalid("top_n must be at least 1".into()));
    }
    Ok(spec
        .peaks
        .iter()
        .filter(|p| p.bin > 0)
        .take(top_n)
        .map(|p| CharacteristicPeriod {
            period_steps: 1.0 / p.frequency,
            frequency: p.frequency,
            power: p.power,
            prominence: p.prominence,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceThresholds {
    /// `ratio >= enhanced` classifies as enhanced.
    pub enhanced: f64,
    /// `ratio <= suppressed` classifies as suppressed.
    pub suppressed: f64,
}

impl Default for ResonanceThresholds {
    fn default() -> Self {
        Self {
            enhanced: 2.0,
            suppressed: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakChange {
    Enhanced,
    Suppressed,
    Unchanged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceEntry {
    pub period_steps: f64,
    pub power_before: f64,
    pub power_after: f64,
    pub ratio: f64,
    pub change: PeakChange,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub entries: Vec<ResonanceEntry>,
}

impl ResonanceReport {
    pub fn entry(&self, period_steps: f64) -> Option<&ResonanceEntry> {
        self.entries
            .iter()
            .find(|e| (e.period_steps - period_steps).abs() < 1e-9)
    }
}

/// Compares peak power at each probe period between two spectra of equal length.
pub fn compare_spectra(
    before: &PowerSpectrum,
    after: &PowerSpectrum,
    probe_periods: &[f64],
    thresholds: &ResonanceThresholds,
) -> Result<ResonanceReport> {
    if before.input_len != after.input_len {
        return Err(Error::LengthMismatch {
            before: before.input_len,
            after: after.input_len,
        });
    }
    let entries = probe_periods
        .iter()
        .map(|&period| {
            let power_before = before.power_near_period(period);
            let power_after = after.power_near_period(period);
            let ratio = if power_before == power_after {
                1.0
            } else {
                power_after / power_before
            };
            let change = if ratio >= thresholds.enhanced {
                PeakChange::Enhanced
            } else if ratio <= thresholds.suppressed {
                PeakChange::Suppressed
            } else {
                PeakChange::Unchanged
            };
            ResonanceEntry {
                period_steps: period,
                power_before,
                power_after,
                ratio,
                change,
            }
        })
        .collect();
    Ok(ResonanceReport { entries })
}

/// One detected peak, in the units of the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSummary {
    pub frequency: f64,
    pub period_steps: f64,
    pub period_seconds: f64,
    pub power: f64,
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub position: usize,
    pub kind: TrajectoryKind,
    pub peaks: Vec<PeakSummary>,
}

impl TrajectoryReport {
    pub fn new(traj: &Trajectory, spec: &PowerSpectrum, delta_t: f64) -> Self {
        let peaks = spec
            .peaks
            .iter()
            .map(|p| PeakSummary {
                frequency: p.frequency,
                period_steps: 1.0 / p.frequency,
                period_seconds: delta_t / p.frequency,
                power: p.power,
                prominence: p.prominence,
            })
            .collect();
        Self {
            position: traj.position,
            kind: traj.kind,
            peaks,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{normalize, RateChanges};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    fn gaussian_returns(n: usize, len: usize, seed: u64) -> ReturnMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|_| (0..len).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let ids = (0..n).map(|i| format!("s{i}")).collect();
        normalize(&RateChanges::new(ids, 300.0, rows)).unwrap()
    }

    fn tone(period: f64, amplitude: f64, len: usize) -> Vec<f64> {
        (1..=len)
            .map(|t| amplitude * (2.0 * PI * t as f64 / period).cos())
            .collect()
    }

    /// Direct O(M²) evaluation of `|Σ_t x_t e^{-2πi k t / M}|²`.
    fn brute_force_dft(x: &[f64]) -> Vec<f64> {
        let m = x.len();
        (0..=m / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    let angle = -2.0 * PI * (k * t) as f64 / m as f64;
                    re += v * angle.cos();
                    im += v * angle.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    #[test]
    fn degenerate_sweep() {
        let g = gaussian_returns(4, 64, 1);
        let seq = sweep(&g, 0).unwrap();
        assert_eq!(seq.systems().len(), 1);
        assert_eq!(seq.tau_max(), 0);
        assert!(trajectory(&seq, TrajectoryKind::Eigenvalue, 0)
            .unwrap()
            .values
            .is_empty());
        assert!(matches!(
            sweep(&g, 33),
            Err(Error::LagTooLarge { lag: 33, max: 32 })
        ));
    }

    #[test]
    fn sweep_prefix_and_trace() {
        let g = gaussian_returns(8, 256, 2);
        let long = sweep(&g, 12).unwrap();
        let short = sweep(&g, 5).unwrap();
        assert_eq!(&long.systems()[..6], short.systems());
        assert_eq!(long.lags(), (0..=12).collect::<Vec<_>>());
        for (s, tr) in long.systems().iter().zip(long.traces()) {
            let sum: f64 = s.eigenvalues().iter().sum();
            assert!((sum - tr).abs() <= 1e-8 * 8.0);
        }
    }

    #[test]
    fn trajectory_reads_sorted_positions() {
        let g = gaussian_returns(6, 200, 3);
        let seq = sweep(&g, 10).unwrap();
        let top = trajectory(&seq, TrajectoryKind::Eigenvalue, 5).unwrap();
        assert_eq!(top.values.len(), 10);
        for (tau, v) in top.values.iter().enumerate() {
            let sys = seq.system(tau + 1);
            assert_eq!(*v, sys.eigenvalues().iter().copied().fold(f64::MIN, f64::max));
        }
        let ipr = trajectory(&seq, TrajectoryKind::Ipr, 2).unwrap();
        assert_eq!(ipr.values[3], seq.system(4).iprs()[2]);
        assert!(matches!(
            trajectory(&seq, TrajectoryKind::Ipr, 6),
            Err(Error::IndexOutOfRange { position: 6, n: 6 })
        ));
    }

    #[test]
    fn constant_trajectory_without_detrend() {
        let spec = spectrum_of(
            &[2.5; 40],
            &SpectrumOptions {
                detrend: Detrend::None,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((spec.power[0] - (2.5 * 40.0f64).powi(2)).abs() < 1e-9);
        assert!(spec.power[1..].iter().all(|&p| p < 1e-18));
        assert!(spec.peaks.is_empty());
        assert_eq!(characteristic_periods(&spec, 3).unwrap(), vec![]);
    }

    #[test]
    fn pure_tone_peak() {
        let values = tone(3.0, 1.0, 99);
        let spec = spectrum_of(&values, &SpectrumOptions::default()).unwrap();
        assert_eq!(spec.frequencies.len(), 50);
        let top = spec.peaks[0];
        assert!((top.frequency - 1.0 / 3.0).abs() <= 1.0 / 99.0);
        let periods = characteristic_periods(&spec, 1).unwrap();
        assert!((periods[0].period_steps - 3.0).abs() < 0.1);
    }

    #[test]
    fn two_tones_ordered_by_amplitude() {
        let values: Vec<f64> = tone(3.0, 2.0, 100)
            .iter()
            .zip(tone(6.0, 1.0, 100))
            .map(|(a, b)| a + b)
            .collect();
        let spec = spectrum_of(&values, &SpectrumOptions::default()).unwrap();
        let periods = characteristic_periods(&spec, 2).unwrap();
        assert_eq!(periods.len(), 2);
        assert!((periods[0].frequency - 1.0 / 3.0).abs() <= 0.01 + 1e-12);
        assert!((periods[1].frequency - 1.0 / 6.0).abs() <= 0.01 + 1e-12);
        assert!(periods[0].power > periods[1].power);
    }

    #[test]
    fn wall_clock_periods_at_five_minute_sampling() {
        let values: Vec<f64> = tone(3.0, 2.0, 102)
            .iter()
            .zip(tone(6.0, 1.0, 102))
            .map(|(a, b)| a + b)
            .collect();
        let traj = Trajectory::new(TrajectoryKind::Eigenvalue, 0, values);
        let spec = power_spectrum(&traj, &SpectrumOptions::default()).unwrap();
        let report = TrajectoryReport::new(&traj, &spec, 300.0);
        let minutes: Vec<f64> = report.peaks.iter().map(|p| p.period_seconds / 60.0).collect();
        assert_eq!(minutes.len(), 2);
        assert!(
            (minutes[0] - 15.0).abs() < 1e-9 && (minutes[1] - 30.0).abs() < 1e-9,
            "{minutes:?}"
        );
    }

    #[test]
    fn hundred_lags_cover_five_hundred_minutes() {
        let seq = sweep(&gaussian_returns(4, 256, 12), 100).unwrap();
        assert_eq!(seq.systems().len(), 101);
        assert_eq!(seq.lags(), (0..=100).collect::<Vec<_>>().as_slice());
        assert_eq!(seq.tau_max() as f64 * seq.delta_t() / 60.0, 500.0);
    }

    #[test]
    fn too_short_spectrum() {
        assert!(matches!(
            spectrum_of(&[1.0; 7], &SpectrumOptions::default()),
            Err(Error::TooShort {
                required: 8,
                found: 7
            })
        ));
    }

    #[test]
    fn matches_direct_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in [8usize, 9, 37, 100, 128] {
            let x: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            for detrend in [Detrend::None, Detrend::Mean] {
                let opts = SpectrumOptions {
                    detrend,
                    ..Default::default()
                };
                let spec = spectrum_of(&x, &opts).unwrap();
                let oracle = brute_force_dft(&prepare(&x, &opts));
                let scale = oracle.iter().copied().fold(0.0, f64::max);
                for (a, b) in spec.power.iter().zip(&oracle) {
                    assert!((a - b).abs() <= 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn hann_taper_keeps_parseval() {
        let x = tone(7.0, 1.0, 64);
        let opts = SpectrumOptions {
            taper: Taper::Hann,
            ..Default::default()
        };
        let spec = spectrum_of(&x, &opts).unwrap();
        let energy: f64 = prepare(&x, &opts).iter().map(|v| v * v).sum();
        assert!((spec.two_sided_total() - 64.0 * energy).abs() <= 1e-6 * 64.0 * energy);
        assert!(spec.peak_near_period(7.0).is_some());
    }

    #[test]
    fn prominence_on_hand_built_spectrum() {
        let p = [0.0, 1.0, 5.0, 2.0, 3.0, 1.0, 9.0, 0.5];
        assert_eq!(prominence(&p, 2), 5.0 - 1.0);
        assert_eq!(prominence(&p, 4), 3.0 - 2.0);
        assert_eq!(prominence(&p, 6), 9.0 - 0.5);
    }

    #[test]
    fn resonance_examples() {
        let base: Vec<f64> = tone(3.0, 1.0, 100)
            .iter()
            .zip(tone(6.0, 1.0, 100))
            .map(|(a, b)| a + b)
            .collect();
        let before = spectrum_of(&base, &SpectrumOptions::default()).unwrap();
        let thresholds = ResonanceThresholds::default();
        let same = compare_spectra(&before, &before, &[3.0, 6.0], &thresholds).unwrap();
        for e in &same.entries {
            assert_eq!(e.ratio, 1.0);
            assert_eq!(e.change, PeakChange::Unchanged);
        }

        let mut after = before.clone();
        let bin = after.nearest_bin(3.0);
        let (lo, hi) = (bin - 1, bin + 1);
        for p in &mut after.power[lo..=hi] {
            *p *= 10.0;
        }
        let report = compare_spectra(&before, &after, &[3.0, 6.0], &thresholds).unwrap();
        assert_eq!(report.entry(3.0).unwrap().change, PeakChange::Enhanced);
        assert!((report.entry(3.0).unwrap().ratio - 10.0).abs() < 1e-9);
        assert_eq!(report.entry(6.0).unwrap().change, PeakChange::Unchanged);

        let short = spectrum_of(&base[..50], &SpectrumOptions::default()).unwrap();
        assert!(matches!(
            compare_spectra(&before, &short, &[3.0], &thresholds),
            Err(Error::LengthMismatch {
                before: 100,
                after: 50
            })
        ));
    }

    #[test]
    fn csv_exports() {
        let traj = Trajectory::new(TrajectoryKind::Eigenvalue, 3, vec![1.5, 2.0, 0.25]);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("tau,value"));
        assert_eq!(text.lines().nth(3), Some("3,2.5000000000000000e-1"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn parseval_and_shape(x in prop::collection::vec(-10.0..10.0f64, 8..200), mean in any::<bool>()) {
            let opts = SpectrumOptions {
                detrend: if mean { Detrend::Mean } else { Detrend::None },
                ..Default::default()
            };
            let spec = spectrum_of(&x, &opts).unwrap();
            prop_assert_eq!(spec.frequencies.len(), x.len() / 2 + 1);
            prop_assert!(spec.power.iter().all(|&p| p >= 0.0));
            let energy: f64 = prepare(&x, &opts).iter().map(|v| v * v).sum();
            let total = spec.two_sided_total();
            let expected = x.len() as f64 * energy;
            prop_assert!((total - expected).abs() <= 1e-6 * expected.max(1e-300));
        }
    }
}
