//! Shared fixtures for the criterion benchmarks.

use lagspec_core::{returns_from_counts, synth_generate, ReturnMatrix, SynthConfig};

/// Normalized returns from the default synthetic preset, resized.
pub fn synthetic_returns(n_series: usize, length: usize, seed: u64) -> ReturnMatrix {
    let cfg = SynthConfig {
        n_series,
        length,
        seed,
        ..SynthConfig::default()
    };
    let counts = synth_generate(&cfg).expect("valid benchmark config");
    returns_from_counts(&counts).expect("synthetic series have variance")
}
