//! Explicit finite-volume solver for the regularized problem
//!
//! ```text
//! u_t = (u^m)_xx + nu * u_x * dB^eps/dt   in I x (0, T*)
//! u(., 0) = u0 + eps,   u = eps on the lateral boundary
//! ```
//!
//! Diffusion uses the central second difference of `u^m`; transport is
//! first-order upwind keyed to the sign of `nu * dB^eps/dt`. The boundary
//! value enters through ghost cells one cell width outside `I` holding `eps`.
//! Under [`stable_dt`] every update is a monotone (order-preserving) map, which
//! gives the discrete maximum principle `eps <= u <= eps + max u0`.

mod diagnostics;
mod field;
mod probe;

pub use diagnostics::{diagnostics_report, DiagnosticsReport, ENERGY_REL_TOL, MAX_PRINCIPLE_TOL};
pub use field::{initial_density, smooth_bump, DensityField, Grid1D, Profile};
pub use probe::{TestFunction, WeakFormSample};

use serde::{Deserialize, Serialize};

use crate::brownian::MollifiedPath;
use crate::error::{Result, SpmeError};

/// Numerical parameters of one pathwise solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Porous-medium exponent, `m > 1`.
    pub m: f64,
    /// Noise strength.
    pub nu: f64,
    /// Regularization level; also the boundary value and initial lift.
    pub epsilon: f64,
    pub grid: Grid1D,
    pub t_end: f64,
    /// Safety factor on the monotonicity bound, in `(0, 1]`.
    pub cfl: f64,
    /// Absolute threshold on `max (u - eps)`; `None` means `1e-6 * max u0`.
    #[serde(default)]
    pub extinction_tol: Option<f64>,
    pub max_steps: usize,
    /// Cap on the step so that `dB^eps/dt` is resolved; `None` means `eps / 8`
    /// with noise and no cap without.
    #[serde(default)]
    pub max_dt: Option<f64>,
}

impl SolverConfig {
    pub fn new(m: f64, nu: f64, epsilon: f64, grid: Grid1D, t_end: f64) -> Self {
        Self {
            m,
            nu,
            epsilon,
            grid,
            t_end,
            cfl: 0.9,
            extinction_tol: None,
            max_steps: 50_000_000,
            max_dt: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.0) || !self.m.is_finite() {
            return Err(SpmeError::config(format!(
                "m must exceed 1, got {}",
                self.m
            )));
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(SpmeError::config(format!(
                "nu must be non-negative, got {}",
                self.nu
            )));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(SpmeError::config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SpmeError::config(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(SpmeError::config(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.max_steps == 0 {
            return Err(SpmeError::config("max_steps must be positive"));
        }
        if let Some(tol) = self.extinction_tol {
            if !(tol > 0.0) {
                return Err(SpmeError::config("extinction_tol must be positive"));
            }
        }
        if let Some(cap) = self.max_dt {
            if !(cap > 0.0) {
                return Err(SpmeError::config("max_dt must be positive"));
            }
        }
        self.grid.validate()
    }

    pub fn step_cap(&self) -> f64 {
        match self.max_dt {
            Some(cap) => cap,
            None if self.nu > 0.0 => self.epsilon / 8.0,
            None => f64::INFINITY,
        }
    }

    /// Extinction threshold for an initial density with peak `u0_max`.
    pub fn extinction_threshold(&self, u0_max: f64) -> f64 {
        self.extinction_tol.unwrap_or(1e-6 * u0_max)
    }
}

#[inline]
pub(crate) fn pow_m(u: f64, m: f64) -> f64 {
    if m == 2.0 {
        u * u
    } else if m == 3.0 {
        u * u * u
    } else {
        u.powf(m)
    }
}

/// Largest step for which the explicit update is monotone:
/// `cfl / (2 m M^(m-1) / h^2 + |nu drift| / h)` with `M = max(max u, eps)`.
///
/// For zero drift this is `cfl h^2 / (2 m M^(m-1))`; for dominant drift it tends
/// to `cfl h / |nu drift|`.
pub fn stable_dt(field: &DensityField, drift: f64, config: &SolverConfig) -> f64 {
    let top = field.max().max(config.epsilon);
    rate_bound(top, drift, config).recip() * config.cfl
}

fn rate_bound(top: f64, drift: f64, config: &SolverConfig) -> f64 {
    let h = config.grid.h();
    let m = config.m;
    2.0 * m * top.powf(m - 1.0) / (h * h) + (config.nu * drift).abs() / h
}

/// Which parts of the operator a step applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Terms {
    Full,
    #[cfg_attr(not(test), allow(dead_code))]
    TransportOnly,
}

/// Per-step discrete functionals evaluated on the pre-step state.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct StepFunctionals {
    /// `(1/h) sum_faces (du)(dw)` with `w = u^m`, boundary faces included.
    pub face_dissipation: f64,
    /// `h sum_j (L w)_j^2`.
    pub lap_sq: f64,
    /// `(1/h) sum_faces (dw)^2`.
    pub grad_sq: f64,
}

/// One explicit update into `out`; `w` is scratch of the same length.
pub(crate) fn apply_step(
    u: &[f64],
    out: &mut [f64],
    w: &mut [f64],
    config: &SolverConfig,
    advection: f64,
    dt: f64,
    terms: Terms,
) -> StepFunctionals {
    let n = u.len();
    let h = config.grid.h();
    let m = config.m;
    let eps = config.epsilon;
    let wg = pow_m(eps, m);
    for (wj, uj) in w.iter_mut().zip(u) {
        *wj = pow_m(*uj, m);
    }
    let inv_h = 1.0 / h;
    let inv_h2 = inv_h * inv_h;
    let diffuse = terms == Terms::Full;
    let mut f = StepFunctionals::default();
    // left boundary face
    let (du, dw) = (u[0] - eps, w[0] - wg);
    f.face_dissipation += du * dw;
    f.grad_sq += dw * dw;
    for j in 0..n {
        let (ul, wl) = if j == 0 {
            (eps, wg)
        } else {
            (u[j - 1], w[j - 1])
        };
        let (ur, wr) = if j + 1 == n {
            (eps, wg)
        } else {
            (u[j + 1], w[j + 1])
        };
        let lap = (wr - 2.0 * w[j] + wl) * inv_h2;
        let adv = if advection > 0.0 {
            advection * (ur - u[j]) * inv_h
        } else {
            advection * (u[j] - ul) * inv_h
        };
        let rate = if diffuse { lap + adv } else { adv };
        out[j] = u[j] + dt * rate;
        let (du, dw) = (ur - u[j], wr - w[j]);
        f.face_dissipation += du * dw;
        f.grad_sq += dw * dw;
        f.lap_sq += lap * lap;
    }
    f.face_dissipation *= inv_h;
    f.grad_sq *= inv_h;
    f.lap_sq *= h;
    f
}

fn check_field(field: &DensityField, config: &SolverConfig) -> Result<()> {
    if field.grid != config.grid {
        return Err(SpmeError::Shape(
            "field grid differs from the solver grid".into(),
        ));
    }
    if let Some(v) = field.values.iter().find(|v| !(**v >= 0.0)) {
        return Err(SpmeError::config(format!(
            "density must be non-negative, found {v}"
        )));
    }
    Ok(())
}

/// One explicit Euler step with drift `dB^eps/dt = drift`. Refuses steps above
/// [`stable_dt`].
pub fn step(
    field: &DensityField,
    drift: f64,
    config: &SolverConfig,
    dt: f64,
) -> Result<DensityField> {
    step_terms(field, drift, config, dt, Terms::Full)
}

pub(crate) fn step_terms(
    field: &DensityField,
    drift: f64,
    config: &SolverConfig,
    dt: f64,
    terms: Terms,
) -> Result<DensityField> {
    config.validate()?;
    check_field(field, config)?;
    let bound = stable_dt(field, drift, config);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(SpmeError::Stability { dt, bound });
    }
    let mut out = vec![0.0; field.values.len()];
    let mut w = vec![0.0; field.values.len()];
    apply_step(
        &field.values,
        &mut out,
        &mut w,
        config,
        config.nu * drift,
        dt,
        terms,
    );
    Ok(DensityField {
        grid: field.grid,
        time: field.time + dt,
        values: out,
    })
}

/// Rate of change of the discrete mass `h sum u_j`: boundary fluxes only,
/// since the interior stencil telescopes.
pub fn mass_rate(field: &DensityField, drift: f64, config: &SolverConfig) -> f64 {
    let u = &field.values;
    let n = u.len();
    let (m, eps, h) = (config.m, config.epsilon, config.grid.h());
    let wg = pow_m(eps, m);
    let diffusive = ((wg - pow_m(u[n - 1], m)) - (pow_m(u[0], m) - wg)) / h;
    let a = config.nu * drift;
    let transport = if a > 0.0 {
        a * (eps - u[0])
    } else {
        a * (u[n - 1] - eps)
    };
    diffusive + transport
}

/// Diagnostics of one time step. State functionals (`grad_wm_sq`,
/// `lap_wm_sq`) refer to the start of the step; `energy_after`, `min_u` and
/// `max_u` to its end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub dt: f64,
    pub drift: f64,
    /// `1/2 h sum u^2` after the step.
    pub energy_after: f64,
    /// Discrete `int m u^(m-1) |u_x|^2` including the explicit-Euler correction
    /// `-dt h |Lw|^2 / (2 (1 - c))`, `c` the transport Courant number.
    pub dissipation: f64,
    /// `int |(u^m)_x|^2`.
    pub grad_wm_sq: f64,
    /// `int |(u^m)_xx|^2`.
    pub lap_wm_sq: f64,
    pub min_u: f64,
    pub max_u: f64,
}

/// Output of [`solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub config: SolverConfig,
    pub snapshots: Vec<DensityField>,
    pub steps: Vec<StepDiagnostics>,
    pub initial_energy: f64,
    /// `max u0` before the lift by `eps`.
    pub u0_max: f64,
    /// Digest of the driving Brownian path.
    pub path_digest: String,
    /// True when the run ended at an extinct snapshot before `t_end`.
    pub stopped_early: bool,
    pub probes: Vec<TestFunction>,
    /// Weak-form ledger, one entry per snapshot, when probes were requested.
    pub weak_form: Vec<WeakFormSample>,
}

impl SolveTrace {
    pub fn epsilon(&self) -> f64 {
        self.config.epsilon
    }

    pub fn final_field(&self) -> &DensityField {
        self.snapshots
            .last()
            .expect("a trace always holds the initial snapshot")
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }
}

/// Run options beyond the numerical configuration.
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Time between stored snapshots.
    pub snapshot_stride: f64,
    /// Stop at the first snapshot with `max (u - eps) <= tol`. The maximum
    /// principle makes `max u` non-increasing once the interior sits below
    /// the boundary layer, so nothing is lost for extinction detection.
    pub stop_when_extinct: Option<f64>,
    /// Test functions for the weak-form ledger.
    pub probes: Vec<TestFunction>,
    /// Keep per-step diagnostics (on by default through [`solve`]).
    pub record_steps: bool,
}

impl SolveOptions {
    pub fn every(snapshot_stride: f64) -> Self {
        Self {
            snapshot_stride,
            record_steps: true,
            ..Self::default()
        }
    }
}

/// Integrates from `u0 + eps` to `t_end` driven by `mpath`.
pub fn solve(
    config: &SolverConfig,
    mpath: &MollifiedPath,
    u0: &DensityField,
    snapshot_stride: f64,
) -> Result<SolveTrace> {
    solve_with(config, mpath, u0, &SolveOptions::every(snapshot_stride))
}

pub fn solve_with(
    config: &SolverConfig,
    mpath: &MollifiedPath,
    u0: &DensityField,
    opts: &SolveOptions,
) -> Result<SolveTrace> {
    config.validate()?;
    check_field(u0, config)?;
    if !(opts.snapshot_stride > 0.0) {
        return Err(SpmeError::config("snapshot stride must be positive"));
    }
    if config.nu > 0.0 && (mpath.epsilon() - config.epsilon).abs() > 1e-12 * config.epsilon {
        return Err(SpmeError::config(format!(
            "path mollified at {} but solver regularization is {}",
            mpath.epsilon(),
            config.epsilon
        )));
    }
    if config.nu > 0.0 && mpath.path().horizon() < config.t_end * (1.0 - 1e-12) {
        return Err(SpmeError::config(format!(
            "path horizon {} is shorter than t_end {}",
            mpath.path().horizon(),
            config.t_end
        )));
    }
    for p in &opts.probes {
        p.check_inside(config.grid)?;
    }

    let eps = config.epsilon;
    let h = config.grid.h();
    let n = config.grid.n;
    let mut u: Vec<f64> = u0.values.iter().map(|v| v + eps).collect();
    let mut next = vec![0.0; n];
    let mut w = vec![0.0; n];
    let energy = |u: &[f64]| 0.5 * h * u.iter().map(|v| v * v).sum::<f64>();

    let mut trace = SolveTrace {
        config: config.clone(),
        snapshots: vec![DensityField {
            grid: config.grid,
            time: 0.0,
            values: u.clone(),
        }],
        steps: Vec::new(),
        initial_energy: energy(&u),
        u0_max: u0.max(),
        path_digest: mpath.path().digest(),
        stopped_early: false,
        probes: opts.probes.clone(),
        weak_form: Vec::new(),
    };
    let mut ledger = probe::Ledger::new(&opts.probes, config.grid);
    if !opts.probes.is_empty() {
        trace.weak_form.push(ledger.sample(0.0, &u));
    }
    if let Some(tol) = opts.stop_when_extinct {
        if u.iter().all(|v| v - eps <= tol) {
            trace.stopped_early = true;
            return Ok(trace);
        }
    }

    let cap = config.step_cap();
    let mut t = 0.0;
    let mut top = u.iter().copied().fold(eps, f64::max);
    let mut k_snap = 1usize;
    let mut steps = 0usize;
    loop {
        let target = (k_snap as f64 * opts.snapshot_stride).min(config.t_end);
        let drift = if config.nu > 0.0 {
            mpath.drift_at(t)
        } else {
            0.0
        };
        let mut dt = config.cfl / rate_bound(top, drift, config);
        dt = dt.min(cap);
        let landing = target - t <= dt * (1.0 + 1e-9);
        if landing {
            dt = target - t;
        }
        let a = config.nu * drift;
        let f = apply_step(&u, &mut next, &mut w, config, a, dt, Terms::Full);
        if !opts.probes.is_empty() {
            let db = mpath.path().value_at(t + dt) - mpath.path().value_at(t);
            ledger.accumulate(&u, &w, config, dt, db);
        }
        std::mem::swap(&mut u, &mut next);
        t = if landing { target } else { t + dt };
        steps += 1;

        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in &u {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        top = hi.max(eps);
        if opts.record_steps {
            let courant = a.abs() * dt / h;
            let correction = dt * f.lap_sq / (2.0 * (1.0 - courant));
            trace.steps.push(StepDiagnostics {
                t: t - dt,
                dt,
                drift,
                energy_after: energy(&u),
                dissipation: f.face_dissipation - correction,
                grad_wm_sq: f.grad_sq,
                lap_wm_sq: f.lap_sq,
                min_u: lo,
                max_u: hi,
            });
        }

        if landing {
            trace.snapshots.push(DensityField {
                grid: config.grid,
                time: t,
                values: u.clone(),
            });
            if !opts.probes.is_empty() {
                trace.weak_form.push(ledger.sample(t, &u));
            }
            k_snap += 1;
            if let Some(tol) = opts.stop_when_extinct {
                if hi - eps <= tol {
                    trace.stopped_early = t < config.t_end;
                    return Ok(trace);
                }
            }
            if t >= config.t_end {
                return Ok(trace);
            }
        }
        if steps >= config.max_steps {
            return Err(SpmeError::Budget {
                max_steps: config.max_steps,
                reached: t,
                partial: Box::new(trace),
            });
        }
    }
}
