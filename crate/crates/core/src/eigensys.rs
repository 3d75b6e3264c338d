//! Eigen-decomposition of lagged correlation matrices, inverse participation
//! ratios, and left / random / right spectrum segmentation against the
//! Marchenko-Pastur interval.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagcorr::LagCorrMatrix;

const MAX_SWEEPS: usize = 10_000;
const UNIT_NORM_TOLERANCE: f64 = 1e-8;

/// Eigenvalues (ascending), orthonormal eigenvectors and their IPRs for one lag.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    lag: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    iprs: Vec<f64>,
}

impl EigenSystem {
    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues sorted ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `k` is the eigenvector paired with `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        let n = self.n();
        &self.eigenvectors.as_slice()[k * n..(k + 1) * n]
    }

    pub fn iprs(&self) -> &[f64] {
        &self.iprs
    }

    /// `max_k ||D u_k - λ_k u_k||`.
    pub fn max_residual(&self, d: &LagCorrMatrix) -> f64 {
        (0..self.n())
            .map(|k| {
                let u = DVector::from_column_slice(self.eigenvector(k));
                (d.values() * &u - &u * self.eigenvalues[k]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `Σ_k λ_k u_k u_kᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled =
            &self.eigenvectors * DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        scaled * self.eigenvectors.transpose()
    }

    /// Squared loading of every series on the eigenvectors at `positions`.
    pub fn series_loadings(&self, positions: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for &k in positions {
            for (acc, u) in out.iter_mut().zip(self.eigenvector(k)) {
                *acc += u * u;
            }
        }
        out
    }
}

/// Solves `D u_k = λ_k u_k` and fills in the IPR of every eigenvector.
///
/// Eigenvalues come back ascending. Each eigenvector's sign is fixed so its
/// largest-magnitude component (lowest index on ties) is positive.
pub fn eigendecompose(d: &LagCorrMatrix) -> Result<EigenSystem> {
    let n = d.n();
    let eig = SymmetricEigen::try_new(d.values().clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::ConvergenceFailure { lag: d.lag(), n })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = DMatrix::zeros(n, n);
    let mut iprs = Vec::with_capacity(n);
    for (k, &src) in order.iter().enumerate() {
        let mut column: Vec<f64> = eig.eigenvectors.column(src).iter().copied().collect();
        fix_sign(&mut column);
        iprs.push(ipr_unchecked(&column));
        eigenvectors.column_mut(k).copy_from_slice(&column);
        eigenvalues.push(eig.eigenvalues[src]);
    }

    Ok(EigenSystem {
        lag: d.lag(),
        eigenvalues,
        eigenvectors,
        iprs,
    })
}

fn fix_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(&lead) = v.iter().find(|x| x.abs() >= peak * (1.0 - 1e-12)) {
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Inverse participation ratio `Σ_l (u^l)^4` of a unit vector.
pub fn ipr(vector: &[f64]) -> Result<f64> {
    let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= UNIT_NORM_TOLERANCE) {
        return Err(Error::NotNormalized { norm });
    }
    Ok(ipr_unchecked(vector))
}

fn ipr_unchecked(vector: &[f64]) -> f64 {
    vector.iter().map(|x| (x * x) * (x * x)).sum()
}

/// Marchenko-Pastur support for a unit-variance correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmtBounds {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// Aspect ratio `effective_length / n`.
    pub q: f64,
}

/// `λ± = (1 ± 1/√q)²` with `q = effective_length / n`.
pub fn rmt_bounds(n: usize, effective_length: usize) -> Result<RmtBounds> {
    if effective_length <= n || n == 0 {
        return Err(Error::DegenerateAspect { n, effective_length });
    }
    let q = effective_length as f64 / n as f64;
    let r = 1.0 / q.sqrt();
    Ok(RmtBounds {
        lambda_minus: (1.0 - r) * (1.0 - r),
        lambda_plus: (1.0 + r) * (1.0 + r),
        q,
    })
}

/// Partition of spectral positions relative to [`RmtBounds`].
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SpectrumSegmentation {
    pub left: Vec<usize>,
    pub random: Vec<usize>,
    pub right: Vec<usize>,
}

impl SpectrumSegmentation {
    /// Positions outside the random segment.
    pub fn non_random(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.left.iter().chain(&self.right).copied().collect();
        out.sort_unstable();
        out
    }
}

/// Splits positions by strict comparison against the bounds; values equal to
/// a bound stay in `random`.
///
/// The bounds are derived for equal-time matrices and are only a heuristic
/// reference when applied at `τ > 0`.
pub fn segment(eigs: &EigenSystem, bounds: &RmtBounds) -> SpectrumSegmentation {
    let mut seg = SpectrumSegmentation::default();
    for (k, &lambda) in eigs.eigenvalues().iter().enumerate() {
        if lambda < bounds.lambda_minus {
            seg.left.push(k);
        } else if lambda > bounds.lambda_plus {
            seg.right.push(k);
        } else {
            seg.random.push(k);
        }
    }
    seg
}
