//! Traffic-counter ingestion: CSV loading, logarithmic rate changes and
//! per-series normalization.
//!
//! Counts arrive as `t,<id1>,<id2>,...` with one row per sampling instant.
//! The rate change of series `i` is the log-ratio of successive counts,
//! `G_i(t) = ln T_i(t + Δt) - ln T_i(t)`, which is then standardized to zero
//! mean and unit variance over the full record using the population (1/L)
//! variance.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::fmt_f64;

/// Relative tolerance on the spacing of consecutive timestamps.
const INTERVAL_TOLERANCE: f64 = 1e-3;

/// Raw traffic counts, `N` series by `L + 1` time points on one shared clock.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    series_ids: Vec<String>,
    interval: f64,
    counts: Vec<Vec<f64>>,
}

impl CountMatrix {
    /// Builds a count matrix, checking positivity, shape and `N >= 2`.
    pub fn new(series_ids: Vec<String>, interval: f64, counts: Vec<Vec<f64>>) -> Result<Self> {
        if series_ids.len() != counts.len() {
            return Err(Error::ConfigInvalid(format!(
                "{} series ids for {} count rows",
                series_ids.len(),
                counts.len()
            )));
        }
        if series_ids.len() < 2 {
            return Err(Error::ConfigInvalid(format!(
                "need at least 2 series, found {}",
                series_ids.len()
            )));
        }
        if !(interval.is_finite() && interval > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "sampling interval must be positive, got {interval}"
            )));
        }
        let len = counts[0].len();
        if len < 3 {
            return Err(Error::TooShort {
                required: 3,
                found: len,
            });
        }
        for (id, row) in series_ids.iter().zip(&counts) {
            if row.len() != len {
                return Err(Error::ConfigInvalid(format!(
                    "series `{id}` has {} samples, expected {len}",
                    row.len()
                )));
            }
            if let Some((t, &v)) = row.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
                return Err(Error::NonPositiveCount {
                    series: id.clone(),
                    row: t,
                    value: v,
                });
            }
        }
        Ok(Self {
            series_ids,
            interval,
            counts,
        })
    }

    pub fn series_ids(&self) -> &[String] {
        &self.series_ids
    }

    /// Sampling interval Δt in seconds.
    pub fn interval(&self) -> f64 {
        self.interval
    }

    pub fn n_series(&self) -> usize {
        self.counts.len()
    }

    /// Number of time points, `L + 1`.
    pub fn len(&self) -> usize {
        self.counts[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.counts[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.counts
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.series_ids.iter().position(|s| s == id)
    }

    pub(crate) fn into_parts(self) -> (Vec<String>, f64, Vec<Vec<f64>>) {
        (self.series_ids, self.interval, self.counts)
    }

    /// Writes the matrix in the same CSV layout [`load_counts`] reads, with
    /// timestamps `k * Δt`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "t")?;
        for id in &self.series_ids {
            write!(out, ",{id}")?;
        }
        writeln!(out)?;
        for t in 0..self.len() {
            write!(out, "{}", fmt_f64(t as f64 * self.interval))?;
            for row in &self.counts {
                write!(out, ",{}", fmt_f64(row[t]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Options for [`load_counts`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// When set, non-positive counts are replaced by `max(T, ε)` with
    /// `ε = factor * median` of the series' positive counts.
    pub epsilon_clamp: Option<f64>,
}

pub const DEFAULT_EPSILON_FACTOR: f64 = 1e-6;

/// Parses a count matrix from CSV.
pub fn load_counts<R: Read>(source: R, options: LoadOptions) -> Result<CountMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let header = reader.headers().map_err(csv_error)?.clone();
    if header.get(0) != Some("t") {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with `t`".into(),
        });
    }
    let series_ids: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    if series_ids.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "header names no series".into(),
        });
    }

    let mut times = Vec::new();
    let mut counts = vec![Vec::new(); series_ids.len()];
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut fields = record.iter();
        times.push(parse_number(fields.next().unwrap_or(""), line)?);
        for (row, field) in counts.iter_mut().zip(fields) {
            row.push(parse_number(field, line)?);
        }
    }

    if times.len() < 3 {
        return Err(Error::TooShort {
            required: 3,
            found: times.len(),
        });
    }
    let interval = infer_interval(&times)?;

    if let Some(factor) = options.epsilon_clamp {
        for (id, row) in series_ids.iter().zip(counts.iter_mut()) {
            clamp_series(id, row, factor)?;
        }
    }

    CountMatrix::new(series_ids, interval, counts)
}

fn parse_number(field: &str, line: usize) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("`{field}` is not a finite number"),
        }),
    }
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("ragged row: expected {expected_len} fields, found {len}"),
        _ => err.to_string(),
    };
    Error::Parse { line, message }
}

fn infer_interval(times: &[f64]) -> Result<f64> {
    let first = times[1] - times[0];
    if !(first > 0.0) {
        return Err(Error::Parse {
            line: 3,
            message: "timestamps must be strictly increasing".into(),
        });
    }
    for (k, pair) in times.windows(2).enumerate() {
        let dt = pair[1] - pair[0];
        if (dt - first).abs() > INTERVAL_TOLERANCE * first {
            return Err(Error::Parse {
                // header is line 1, first data row is line 2
                line: k + 3,
                message: format!("irregular sampling interval {dt} (expected {first})"),
            });
        }
    }
    Ok((times[times.len() - 1] - times[0]) / (times.len() - 1) as f64)
}

fn clamp_series(id: &str, row: &mut [f64], factor: f64) -> Result<()> {
    if !row.iter().any(|&v| v <= 0.0) {
        return Ok(());
    }
    let mut positive: Vec<f64> = row.iter().copied().filter(|&v| v > 0.0).collect();
    if positive.is_empty() {
        let (t, &v) = row.iter().enumerate().next().expect("non-empty row");
        return Err(Error::NonPositiveCount {
            series: id.to_owned(),
            row: t,
            value: v,
        });
    }
    let eps = factor * median(&mut positive);
    for v in row.iter_mut() {
        *v = v.max(eps);
    }
    Ok(())
}

/// Median of a slice (reorders it).
pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Un-normalized logarithmic rate changes `G_i(t)`, `N` by `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateChanges {
    pub series_ids: Vec<String>,
    pub interval: f64,
    pub values: Vec<Vec<f64>>,
}

impl RateChanges {
    pub fn new(series_ids: Vec<String>, interval: f64, values: Vec<Vec<f64>>) -> Self {
        Self {
            series_ids,
            interval,
            values,
        }
    }
}

/// `G_i(t) = ln T_i(t+1) - ln T_i(t)` for `t = 0..L-1`.
pub fn rate_changes(counts: &CountMatrix) -> RateChanges {
    let values = counts
        .rows()
        .iter()
        .map(|row| row.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
        .collect();
    RateChanges::new(counts.series_ids().to_vec(), counts.interval(), values)
}

/// Normalized rate changes `g_i(t)` with zero mean and unit population
/// variance per series.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    series_ids: Vec<String>,
    interval: f64,
    returns: Vec<Vec<f64>>,
    raw_mean: Vec<f64>,
    raw_std: Vec<f64>,
}

impl ReturnMatrix {
    pub fn series_ids(&self) -> &[String] {
        &self.series_ids
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    pub fn n_series(&self) -> usize {
        self.returns.len()
    }

    /// Number of return samples `L`.
    pub fn len(&self) -> usize {
        self.returns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.returns[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.returns
    }

    /// Per-series mean of the raw rate changes.
    pub fn raw_mean(&self) -> &[f64] {
        &self.raw_mean
    }

    /// Per-series population standard deviation of the raw rate changes.
    pub fn raw_std(&self) -> &[f64] {
        &self.raw_std
    }
}

/// Standardizes each series of rate changes over the full record.
pub fn normalize(raw: &RateChanges) -> Result<ReturnMatrix> {
    if raw.values.len() < 2 {
        return Err(Error::ConfigInvalid(format!(
            "need at least 2 series, found {}",
            raw.values.len()
        )));
    }
    let len = raw.values[0].len();
    if len < 2 {
        return Err(Error::TooShort {
            required: 2,
            found: len,
        });
    }
    if let Some(row) = raw.values.iter().find(|r| r.len() != len) {
        return Err(Error::ConfigInvalid(format!(
            "ragged rate-change rows ({} vs {len})",
            row.len()
        )));
    }

    let normalized: Vec<(Vec<f64>, f64, f64)> = raw
        .values
        .par_iter()
        .zip(raw.series_ids.par_iter())
        .map(|(row, id)| standardize(row).ok_or_else(|| Error::ZeroVariance { series: id.clone() }))
        .collect::<Result<_>>()?;

    let mut returns = Vec::with_capacity(normalized.len());
    let mut raw_mean = Vec::with_capacity(normalized.len());
    let mut raw_std = Vec::with_capacity(normalized.len());
    for (g, mean, std) in normalized {
        returns.push(g);
        raw_mean.push(mean);
        raw_std.push(std);
    }
    Ok(ReturnMatrix {
        series_ids: raw.series_ids.clone(),
        interval: raw.interval,
        returns,
        raw_mean,
        raw_std,
    })
}

fn standardize(row: &[f64]) -> Option<(Vec<f64>, f64, f64)> {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = row.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if !(std > 1e-14 * scale) || !std.is_finite() {
        return None;
    }
    let g = row.iter().map(|x| (x - mean) / std).collect();
    Some((g, mean, std))
}

/// Convenience: counts straight to normalized returns.
pub fn returns_from_counts(counts: &CountMatrix) -> Result<ReturnMatrix> {
    normalize(&rate_changes(counts))
}
