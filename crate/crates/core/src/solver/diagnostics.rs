use serde::{Deserialize, Serialize};

use super::SolveTrace;

/// Relative slack on the discrete energy inequality (round-off only).
pub const ENERGY_REL_TOL: f64 = 1e-6;
/// Absolute slack on the maximum-principle bounds.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-8;

/// Discrete a priori functionals of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// `1/2 int u(0)^2`.
    pub energy_rhs: f64,
    /// `min_T [RHS - (1/2 int u(T)^2 + int_0^T int m u^(m-1) |u_x|^2)]`.
    pub energy_residual: f64,
    pub total_dissipation: f64,
    /// `sup_T T/2 int |(u^m)_x|^2 (T)`.
    pub sup_weighted_gradient: f64,
    /// `int_0^T* t int |(u^m)_xx|^2`.
    pub weighted_laplacian: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub energy_ok: bool,
    pub max_principle_ok: bool,
    pub violations: Vec<String>,
}

pub fn diagnostics_report(trace: &SolveTrace) -> DiagnosticsReport {
    let rhs = trace.initial_energy;
    let eps = trace.epsilon();
    let mut cumulative = 0.0;
    let mut residual = 0.0_f64;
    let mut sup_grad = 0.0_f64;
    let mut lap = 0.0;
    let first = &trace.snapshots[0];
    let (mut lo, mut hi) = (first.min(), first.max());
    for s in &trace.steps {
        sup_grad = sup_grad.max(0.5 * s.t * s.grad_wm_sq);
        lap += s.dt * s.t * s.lap_wm_sq;
        cumulative += s.dt * s.dissipation;
        residual = residual.min(rhs - (s.energy_after + cumulative));
        lo = lo.min(s.min_u);
        hi = hi.max(s.max_u);
    }
    for snap in &trace.snapshots {
        lo = lo.min(snap.min());
        hi = hi.max(snap.max());
    }
    let mut violations = Vec::new();
    let energy_ok = residual >= -ENERGY_REL_TOL * rhs;
    if !energy_ok {
        violations.push(format!("energy inequality violated by {}", -residual));
    }
    let upper = eps + trace.u0_max + MAX_PRINCIPLE_TOL;
    let max_principle_ok = lo >= eps - MAX_PRINCIPLE_TOL && hi <= upper;
    if !max_principle_ok {
        violations.push(format!(
            "maximum principle violated: range [{lo}, {hi}] vs [{eps}, {}]",
            eps + trace.u0_max
        ));
    }
    DiagnosticsReport {
        energy_rhs: rhs,
        energy_residual: residual,
        total_dissipation: cumulative,
        sup_weighted_gradient: sup_grad,
        weighted_laplacian: lap,
        min_u: lo,
        max_u: hi,
        energy_ok,
        max_principle_ok,
        violations,
    }
}
