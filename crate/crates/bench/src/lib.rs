//! Benchmark fixtures shared by the criterion targets.

use spme_core::{initial_density, DensityField, Grid1D, Profile, SolverConfig};

/// Bump on `(-1, 1)` lifted by `epsilon`, with a matching noisy configuration.
pub fn bump_fixture(n: usize, epsilon: f64) -> (SolverConfig, DensityField) {
    let g = Grid1D::new(-1.0, 1.0, n).expect("valid grid");
    let profile = Profile::Bump {
        center: 0.0,
        half_width: 0.5,
        height: 1.0,
    };
    let u0 = initial_density(&profile, g).expect("bump fits the grid").plus_constant(epsilon);
    (SolverConfig::new(2.0, 1.0, epsilon, g, 0.1), u0)
}
