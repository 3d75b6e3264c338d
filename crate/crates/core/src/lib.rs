//! Spectral analysis of time-lagged correlations in multivariate traffic
//! counter series.
//!
//! The pipeline runs
//!
//! 1. [`ingest`]: counts to normalized logarithmic rate changes,
//! 2. [`lagcorr`]: the symmetrized lagged correlation matrix `D(τ)`,
//! 3. [`eigensys`]: eigenvalues, eigenvector IPRs and Marchenko-Pastur
//!    segmentation,
//! 4. [`strobo`]: lag sweeps, eigenvalue / IPR trajectories and their power
//!    spectra,
//! 5. [`experiment`]: synthetic data, noise-like and periodic injections and
//!    before/after comparisons.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigensys;
pub mod error;
pub mod experiment;
pub mod format;
pub mod ingest;
pub mod lagcorr;
pub mod strobo;

pub use eigensys::{eigendecompose, ipr, rmt_bounds, segment, EigenSystem, RmtBounds, SpectrumSegmentation};
pub use error::{Error, Result};
pub use experiment::{
    inject, resolve_targets, run_experiment, select_targets, synth_generate, ExperimentOptions,
    ExperimentReport, InjectionKind, InjectionSpec, SynthConfig, TargetSelection, WatchReport,
};
pub use ingest::{
    load_counts, normalize, rate_changes, returns_from_counts, CountMatrix, LoadOptions, RateChanges,
    ReturnMatrix,
};
pub use lagcorr::{equal_time_corr, lag_corr, LagCorrMatrix};
pub use strobo::{
    characteristic_periods, compare_spectra, power_spectrum, spectrum_of, sweep, trajectory,
    CharacteristicPeriod, Detrend, PeakChange, PowerSpectrum, ResonanceEntry, ResonanceReport,
    ResonanceThresholds, SpectrumOptions, StroboscopicSequence, Taper, Trajectory, TrajectoryKind,
};
