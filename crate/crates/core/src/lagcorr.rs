//! Symmetrized time-lagged correlation matrices.
//!
//! For normalized returns `g` of length `L` and an integer lag `τ`,
//!
//! ```text
//! D_ij(τ) = 1 / (2 (L - τ)) * Σ_{t=0}^{L-τ-1} [ g_i(t) g_j(t+τ) + g_j(t) g_i(t+τ) ]
//! ```
//!
//! The sum runs over the `L - τ` offsets where both factors exist, so every
//! lag is normalized by the number of products actually accumulated. At
//! `τ = 0` this reduces to the ordinary equal-time correlation matrix.
//! Dividing by `2L` instead would scale every entry by `(L - τ) / L`, so
//! results under that convention follow by rescaling.
//!
//! The normalization is the global one from [`crate::ingest::normalize`];
//! windows are not re-standardized per lag.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::ingest::ReturnMatrix;

/// Symmetric `N x N` lagged correlation matrix for one lag.
#[derive(Debug, Clone, PartialEq)]
pub struct LagCorrMatrix {
    lag: usize,
    values: DMatrix<f64>,
    effective_length: usize,
}

impl LagCorrMatrix {
    /// Wraps an arbitrary dense matrix, which must be square and exactly
    /// symmetric.
    pub fn from_dense(lag: usize, values: DMatrix<f64>, effective_length: usize) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::ConfigInvalid(format!(
                "matrix is {}x{}, expected square",
                values.nrows(),
                values.ncols()
            )));
        }
        let n = values.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if values[(i, j)].to_bits() != values[(j, i)].to_bits() {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self {
            lag,
            values,
            effective_length,
        })
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Number of time offsets summed, `L - τ`.
    pub fn effective_length(&self) -> usize {
        self.effective_length
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.values.trace()
    }

    /// Dumps the full matrix as CSV, one row per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n() {
            let line: Vec<String> = (0..self.n()).map(|j| fmt_f64(self.values[(i, j)])).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Largest admissible lag for `len` return samples.
pub fn max_lag(len: usize) -> usize {
    len / 2
}

/// Builds `D(τ)` for one lag.
pub fn lag_corr(g: &ReturnMatrix, lag: usize) -> Result<LagCorrMatrix> {
    let len = g.len();
    let max = max_lag(len);
    if lag > max {
        return Err(Error::LagTooLarge { lag, max });
    }
    let n = g.n_series();
    let effective = len - lag;
    let scale = 1.0 / (2.0 * effective as f64);
    let rows = g.rows();

    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let gi = &rows[i];
            (i..n)
                .map(|j| {
                    let gj = &rows[j];
                    let forward = dot(&gi[..effective], &gj[lag..]);
                    let backward = if i == j {
                        forward
                    } else {
                        dot(&gj[..effective], &gi[lag..])
                    };
                    scale * (forward + backward)
                })
                .collect()
        })
        .collect();

    let mut values = DMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            let j = i + offset;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(LagCorrMatrix {
        lag,
        values,
        effective_length: effective,
    })
}

/// Equal-time correlation matrix, `D(0)`.
pub fn equal_time_corr(g: &ReturnMatrix) -> Result<LagCorrMatrix> {
    lag_corr(g, 0)
}

/// Inner product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
