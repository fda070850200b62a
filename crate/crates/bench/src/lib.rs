//! Shared setup for the benches.

use mopkit::builtin::builtin;
use mopkit::moments::{compute_moments, MomentData, QuadratureConfig};
use mopkit::Pipeline;

/// Weights exercised by every bench: scalar, nilpotent 2x2 and a block
/// Chebyshev weight on an interval.
pub const SPECS: &[&str] = &["hermite-scalar", "hermite-nilpotent", "berezanskii-chebyshev"];

pub fn pipeline(name: &str, n_max: usize) -> Pipeline {
    Pipeline::with_defaults(builtin(name).expect("builtin"), n_max).expect("pipeline")
}

pub fn moments(name: &str, n_max: usize) -> MomentData {
    compute_moments(&builtin(name).expect("builtin"), n_max, &QuadratureConfig::default()).expect("moments")
}
