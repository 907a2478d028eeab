//! Fixtures shared by the criterion benchmarks.

use gror_core::bench::{generate, SimulationSpec};
use gror_core::rotsearch::AngleInterval;
use gror_core::CorrespondenceSet;

/// The simulation protocol's set at the given outlier ratio (80 inliers,
/// σ = ρ = 0.002).
pub fn simulated_set(outlier_ratio: f64, seed: u64) -> CorrespondenceSet {
    let spec = SimulationSpec {
        outlier_ratio,
        seed,
        ..SimulationSpec::default()
    };
    generate(&spec).expect("valid simulation spec").set
}

/// `n` arcs with pseudo-random starts and widths up to about 0.6 rad; some
/// wrap past zero.
pub fn random_intervals(n: usize, seed: u64) -> Vec<AngleInterval> {
    // SplitMix64: enough for spreading benchmark inputs.
    let mut state = seed;
    let mut next = move || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        (z ^ (z >> 31)) as f64 / u64::MAX as f64
    };
    (0..n)
        .map(|k| AngleInterval::centered(k, next() * std::f64::consts::TAU, next() * 0.3))
        .collect()
}
