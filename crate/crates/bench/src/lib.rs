//! Fixtures shared by the benchmarks.

use polaron_core::dynamics::{Perturbation, RunSetup};

/// Traveling start at `v0 = 0.4 e_3` on an `N³` box of side `L`.
pub fn traveling_setup(n: usize, l: f64, dt: f64) -> RunSetup {
    RunSetup::traveling(n, l, [0.0, 0.0, 0.4], Perturbation::default(), dt)
}
