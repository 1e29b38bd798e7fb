//! Multi-epsilon experiments on common noise: contraction of shifted truncated
//! densities, Wong-Zakai Cauchy tables, the weak-form residual and Barenblatt
//! domination of the transformed pressure.
//!
//! Every experiment draws one Brownian path per path index and mollifies it at
//! every ladder level, so changing only `eps` never resamples noise.

mod checks;
mod contraction;
mod convergence;
mod domination;
mod suites;
mod weak_form;

pub use checks::{
    barenblatt_check, detect_free_boundary, Assertion, BarenblattCheck, BarenblattReport,
};
pub use contraction::{contraction_experiment, ContractionPair, ContractionReport};
pub use convergence::{wz_convergence, CauchyRow, CauchyTable};
pub use domination::{barenblatt_domination, DominationReport, DominationRun};
pub use suites::{
    cauchy_assertions, contraction_assertions, domination_assertions, domination_check,
    weak_form_refinement, DominationCheck, WeakFormRefinement, WeakFormRefinementReport,
};
pub use weak_form::{weak_form_residual, WeakFormRow, WeakFormTable};

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brownian::{
    derive_seed, mollify_shared, sample_path, BrownianPath, MollifiedPath, Mollifier,
};
use crate::error::{Result, SpmeError};
use crate::solver::{
    initial_density, solve_with, DensityField, Profile, SolveOptions, SolveTrace, SolverConfig,
};
use crate::transforms::{shift_field, ExtendedField};

/// Shared setup of the multi-epsilon experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    /// Base solver configuration; its `epsilon` is replaced by each ladder level.
    pub solver: SolverConfig,
    pub profile: Profile,
    /// Regularization levels, strictly decreasing.
    pub ladder: Vec<f64>,
    pub n_paths: usize,
    pub master_seed: u64,
    pub snapshot_stride: f64,
    /// Brownian sampling step; `None` means a quarter of the smallest level.
    #[serde(default)]
    pub path_dt: Option<f64>,
}

impl LadderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() || self.ladder.iter().any(|e| !(*e > 0.0)) {
            return Err(SpmeError::config("ladder levels must be positive"));
        }
        if self.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(SpmeError::config("ladder must be strictly decreasing"));
        }
        if self.n_paths == 0 {
            return Err(SpmeError::config("need at least one path"));
        }
        if !(self.snapshot_stride > 0.0) {
            return Err(SpmeError::config("snapshot stride must be positive"));
        }
        self.level(self.ladder[0]).validate()
    }

    pub fn smallest(&self) -> f64 {
        self.ladder.last().copied().unwrap_or(f64::NAN)
    }

    pub fn path_dt(&self) -> f64 {
        self.path_dt.unwrap_or(self.smallest() / 4.0)
    }

    pub fn level(&self, epsilon: f64) -> SolverConfig {
        SolverConfig {
            epsilon,
            ..self.solver.clone()
        }
    }
}

/// All ladder solves on one path.
#[derive(Debug, Clone)]
pub struct PathLadder {
    pub index: usize,
    pub seed: u64,
    pub path: Arc<BrownianPath>,
    pub mpaths: Vec<MollifiedPath>,
    pub traces: Vec<SolveTrace>,
}

impl PathLadder {
    /// `u_eps(x + nu (B_t - B^eps_t), t)` at every snapshot of ladder level
    /// `level`, with `u_eps` extended by `eps` outside the interval.
    pub fn shifted(&self, level: usize) -> Result<Vec<DensityField>> {
        let trace = &self.traces[level];
        let mpath = &self.mpaths[level];
        let nu = trace.config.nu;
        trace
            .snapshots
            .iter()
            .map(|s| {
                shift_back(
                    s,
                    nu * (self.path.value_at(s.time) - mpath.value_at(s.time)),
                    trace.epsilon(),
                )
            })
            .collect()
    }
}

/// `u(x + delta)` on the grid of `field`, extending `field` by `fill`.
pub fn shift_back(field: &DensityField, delta: f64, fill: f64) -> Result<DensityField> {
    if delta == 0.0 {
        return Ok(field.clone());
    }
    let h = field.grid.h();
    let ext = ExtendedField::extend(field, delta.abs() + h, fill)?;
    let moved = shift_field(&ext, delta)?;
    let pad = (ext.grid.n - field.grid.n) / 2;
    Ok(DensityField {
        grid: field.grid,
        time: field.time,
        values: moved.values[pad..pad + field.grid.n].to_vec(),
    })
}

/// Solves every ladder level on every path, paths in parallel on the current
/// rayon pool, results in path order.
pub fn run_ladder(cfg: &LadderConfig, opts: &SolveOptions) -> Result<Vec<PathLadder>> {
    cfg.validate()?;
    let u0 = initial_density(&cfg.profile, cfg.solver.grid)?;
    let kernel = Arc::new(Mollifier::default());
    let runs: Vec<Result<PathLadder>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|index| {
            let seed = derive_seed(cfg.master_seed, index as u64);
            let path = Arc::new(sample_path(cfg.solver.t_end, cfg.path_dt(), seed)?);
            let mut mpaths = Vec::with_capacity(cfg.ladder.len());
            let mut traces = Vec::with_capacity(cfg.ladder.len());
            for &eps in &cfg.ladder {
                let mpath = mollify_shared(Arc::clone(&path), eps, Arc::clone(&kernel))?;
                traces.push(solve_with(&cfg.level(eps), &mpath, &u0, opts)?);
                mpaths.push(mpath);
            }
            let run = PathLadder {
                index,
                seed,
                path,
                mpaths,
                traces,
            };
            check_common_noise(&run)?;
            Ok(run)
        })
        .collect();
    runs.into_iter().collect()
}

/// Every trace of a path ladder must carry the digest of the same path.
pub fn check_common_noise(run: &PathLadder) -> Result<()> {
    let digest = run.path.digest();
    if let Some(t) = run.traces.iter().find(|t| t.path_digest != digest) {
        return Err(SpmeError::Integrity(format!(
            "path {} at eps = {} was driven by {} instead of {digest}",
            run.index,
            t.epsilon(),
            t.path_digest
        )));
    }
    Ok(())
}

/// Least-squares fit of `y = c x^p` in log-log coordinates; `None` with fewer
/// than two positive points.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, (my - slope * mx).exp()))
}

/// Sample mean and standard error.
pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `h sum |a - b|` over cells with centres in `[lo, hi]`.
pub(crate) fn l1_on(
    a: &DensityField,
    b: &DensityField,
    lo: f64,
    hi: f64,
    map: impl Fn(f64) -> f64,
) -> f64 {
    let g = a.grid;
    g.h()
        * (0..g.n)
            .filter(|&j| (lo..=hi).contains(&g.x(j)))
            .map(|j| (map(a.values[j]) - map(b.values[j])).abs())
            .sum::<f64>()
}
