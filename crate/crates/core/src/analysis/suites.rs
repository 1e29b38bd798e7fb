use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::{barenblatt_domination, weak_form_residual};
use super::{
    Assertion, BarenblattCheck, CauchyTable, ContractionReport, DominationReport, DominationRun,
};
use crate::barenblatt::dominating_profile;
use crate::brownian::{derive_seed, mollify, sample_path, BrownianPath, MollifiedPath};
use crate::error::{Result, SpmeError};
use crate::solver::{
    initial_density, solve, solve_with, Grid1D, Profile, SolveOptions, SolveTrace, SolverConfig,
    TestFunction,
};

/// Consecutive Cauchy distances must strictly decrease.
pub fn cauchy_assertions(table: &CauchyTable) -> Vec<Assertion> {
    table
        .rows
        .windows(2)
        .map(|w| {
            Assertion::at_least(
                format!(
                    "sup_l1({}, {}) - sup_l1({}, {})",
                    w[0].epsilon, w[0].epsilon_next, w[1].epsilon, w[1].epsilon_next
                ),
                w[0].sup_l1 - w[1].sup_l1,
                f64::MIN_POSITIVE,
            )
        })
        .collect()
}

/// The pair with the largest `eps` must sit farther from the reference than
/// the pair with the smallest.
pub fn contraction_assertions(report: &ContractionReport) -> Vec<Assertion> {
    match (report.pairs.first(), report.pairs.last()) {
        (Some(a), Some(b)) if report.pairs.len() >= 2 => vec![Assertion::at_least(
            format!(
                "distance({}, {}) - distance({}, {})",
                a.epsilon, a.epsilon_hat, b.epsilon, b.epsilon_hat
            ),
            a.distance - b.distance,
            f64::MIN_POSITIVE,
        )],
        _ => Vec::new(),
    }
}

pub fn domination_assertions(report: &DominationReport, label: &str) -> Vec<Assertion> {
    vec![
        Assertion::at_most(format!("{label}.violations"), report.violations as f64, 0.0),
        Assertion::at_most(
            format!("{label}.max_excess"),
            report.max_excess,
            report.tol + report.interpolation_bound,
        ),
    ]
}

/// Bump initial data under its dominating Barenblatt profile on the grid of a
/// [`BarenblattCheck`]: one run at `nu = 0` and `noisy_paths` seeded runs at
/// `nu = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DominationCheck {
    pub half_width: f64,
    pub height: f64,
    pub checkpoints: Vec<f64>,
    pub noisy_paths: usize,
    pub seed: u64,
}

impl Default for DominationCheck {
    fn default() -> Self {
        Self {
            half_width: 1.0,
            height: 0.5,
            checkpoints: vec![0.1, 0.2, 0.3, 0.4],
            noisy_paths: 5,
            seed: 8,
        }
    }
}

pub fn domination_check(base: &BarenblattCheck, cfg: &DominationCheck) -> Result<Vec<Assertion>> {
    let g = Grid1D::new(base.domain.0, base.domain.1, base.n)?;
    let u0 = initial_density(
        &Profile::Bump {
            center: g.midpoint(),
            half_width: cfg.half_width,
            height: cfg.height,
        },
        g,
    )?;
    let bar = dominating_profile(&u0, base.m, base.domain)?;
    let stride = cfg
        .checkpoints
        .first()
        .copied()
        .ok_or_else(|| SpmeError::config("domination check needs checkpoints"))?;
    let run = |nu: f64, seed: u64| -> Result<(SolveTrace, MollifiedPath)> {
        let solver = SolverConfig::new(base.m, nu, base.epsilon, g, base.t_end);
        let dt = base.epsilon / 4.0;
        let path = if nu > 0.0 {
            sample_path(base.t_end, dt, seed)?
        } else {
            BrownianPath::from_values(dt, vec![0.0; (base.t_end / dt).ceil() as usize + 1], 0)?
        };
        let mp = mollify(&path, base.epsilon)?;
        Ok((solve(&solver, &mp, &u0, stride)?, mp))
    };
    let (trace, mp) = run(0.0, 0)?;
    let det = barenblatt_domination(
        &[DominationRun {
            trace: &trace,
            mpath: &mp,
        }],
        &bar,
        &cfg.checkpoints,
    )?;
    let mut checks = vec![
        Assertion::at_most("nu=0.violations", det.violations as f64, 0.0),
        Assertion::at_most("nu=0.max_excess", det.max_excess, det.tol),
    ];
    if cfg.noisy_paths > 0 {
        let noisy: Vec<(SolveTrace, MollifiedPath)> = (0..cfg.noisy_paths as u64)
            .into_par_iter()
            .map(|i| run(1.0, derive_seed(cfg.seed, i)))
            .collect::<Result<_>>()?;
        let runs: Vec<DominationRun> = noisy
            .iter()
            .map(|(t, m)| DominationRun { trace: t, mpath: m })
            .collect();
        checks.extend(domination_assertions(
            &barenblatt_domination(&runs, &bar, &cfg.checkpoints)?,
            "nu=1",
        ));
    }
    Ok(checks)
}

/// One path, fixed `epsilon`, solved on `(n, dt)` and `(2n, dt/4)` with the
/// same probes; the weak-form residual must shrink by `min_factor` per probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakFormRefinement {
    pub m: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub domain: (f64, f64),
    pub n: usize,
    /// Step cap of the coarse solve.
    pub dt: f64,
    pub t_end: f64,
    pub checkpoints: Vec<f64>,
    pub profile: Profile,
    /// Sampling step of the shared Brownian path.
    pub path_dt: f64,
    pub seed: u64,
    pub probes: Vec<TestFunction>,
    pub min_factor: f64,
}

impl Default for WeakFormRefinement {
    fn default() -> Self {
        Self {
            m: 2.0,
            nu: 1.0,
            epsilon: 0.01,
            domain: (-1.0, 1.0),
            n: 64,
            dt: 1e-4,
            t_end: 0.1,
            checkpoints: vec![0.05, 0.1],
            profile: Profile::Bump {
                center: 0.0,
                half_width: 0.5,
                height: 1.0,
            },
            path_dt: 1e-5,
            seed: 2024,
            probes: vec![
                TestFunction::new(-0.3, 0.4),
                TestFunction::new(0.0, 0.5),
                TestFunction::new(0.3, 0.4),
            ],
            min_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakFormRefinementReport {
    /// Largest `|residual|` over checkpoints, per probe.
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub assertions: Vec<Assertion>,
}

pub fn weak_form_refinement(cfg: &WeakFormRefinement) -> Result<WeakFormRefinementReport> {
    if cfg.probes.is_empty() {
        return Err(SpmeError::config(
            "weak-form refinement needs test functions",
        ));
    }
    let stride = cfg
        .checkpoints
        .first()
        .copied()
        .ok_or_else(|| SpmeError::config("weak-form refinement needs checkpoints"))?;
    let path = sample_path(cfg.t_end, cfg.path_dt, cfg.seed)?;
    let mpath = mollify(&path, cfg.epsilon)?;
    let residuals = |n: usize, dt: f64| -> Result<Vec<f64>> {
        let g = Grid1D::new(cfg.domain.0, cfg.domain.1, n)?;
        let mut solver = SolverConfig::new(cfg.m, cfg.nu, cfg.epsilon, g, cfg.t_end);
        solver.max_dt = Some(dt);
        let u0 = initial_density(&cfg.profile, g)?;
        let opts = SolveOptions {
            probes: cfg.probes.clone(),
            ..SolveOptions::every(stride)
        };
        let trace = solve_with(&solver, &mpath, &u0, &opts)?;
        let table = weak_form_residual(&trace, &path, &cfg.checkpoints)?;
        Ok((0..cfg.probes.len()).map(|k| table.max_abs(k)).collect())
    };
    let coarse = residuals(cfg.n, cfg.dt)?;
    let fine = residuals(2 * cfg.n, cfg.dt / 4.0)?;
    let assertions = coarse
        .iter()
        .zip(&fine)
        .enumerate()
        .map(|(k, (c, f))| {
            Assertion::at_least(format!("probe{k}.reduction"), c / f, cfg.min_factor)
        })
        .collect();
    Ok(WeakFormRefinementReport {
        coarse,
        fine,
        assertions,
    })
}
