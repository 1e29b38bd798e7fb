//! Stochastic porous-medium solver: Brownian paths and their mollification,
//! a monotone finite-volume scheme for the regularized equation, Barenblatt
//! references, frame and pressure transforms, extinction statistics and
//! convergence experiments.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod barenblatt;
pub mod brownian;
pub mod error;
pub mod extinction;
pub mod io;
pub mod solver;
pub mod transforms;

#[cfg(test)]
mod testutil;

pub use barenblatt::{dominating_profile, support_rate_constant, BarenblattProfile, SupportRate};
pub use brownian::{
    derive_seed, hoelder_constant, mollify, sample_path, BrownianPath, HoelderEstimate,
    MollifiedPath, Mollifier,
};
pub use error::{Result, SpmeError};
pub use solver::{
    initial_density, solve, solve_with, stable_dt, step, DensityField, Grid1D, Profile,
    SolveOptions, SolveTrace, SolverConfig, StepDiagnostics,
};
pub use transforms::{ExtendedField, PressureField};
