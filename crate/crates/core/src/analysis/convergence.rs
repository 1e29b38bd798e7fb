use serde::{Deserialize, Serialize};

use super::{l1_on, mean_se, run_ladder, LadderConfig};
use crate::error::{Result, SpmeError};
use crate::solver::SolveOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyRow {
    pub epsilon: f64,
    pub epsilon_next: f64,
    /// `sup_{T in [tau, T*]} mean_paths ||u_eps(T) - u_eps'(T)||_L1(I)` after the shift.
    pub sup_l1: f64,
    pub sup_l1_std_error: f64,
    /// `int_0^T* mean_paths ||u_eps - u_eps'||_L1(I) dt` (trapezoid over snapshots).
    pub integrated_l1: f64,
    /// Part of `integrated_l1` on `[0, tau]`.
    pub integrated_head: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyTable {
    pub tau: f64,
    pub t_end: f64,
    pub n_paths: usize,
    pub rows: Vec<CauchyRow>,
}

impl CauchyTable {
    /// Consecutive-pair sup distances strictly decrease along the ladder.
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_l1 < w[0].sup_l1)
    }
}

/// Cauchy table of the shifted densities for consecutive ladder pairs.
pub fn wz_convergence(cfg: &LadderConfig, tau: f64) -> Result<CauchyTable> {
    if !(tau > 0.0) {
        return Err(SpmeError::config(format!(
            "tau must be positive, got {tau}"
        )));
    }
    cfg.validate()?;
    let mut table = CauchyTable {
        tau,
        t_end: cfg.solver.t_end,
        n_paths: cfg.n_paths,
        rows: Vec::new(),
    };
    if cfg.ladder.len() < 2 {
        return Ok(table);
    }
    let runs = run_ladder(cfg, &SolveOptions::every(cfg.snapshot_stride))?;
    let shifted: Vec<Vec<_>> = runs
        .iter()
        .map(|r| {
            (0..cfg.ladder.len())
                .map(|l| r.shifted(l))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let g = cfg.solver.grid;
    let times = runs[0].traces[0].snapshot_times();
    for level in 0..cfg.ladder.len() - 1 {
        let mut means = Vec::with_capacity(times.len());
        let mut sup = (f64::NEG_INFINITY, 0.0);
        for (i, &t) in times.iter().enumerate() {
            let d: Vec<f64> = shifted
                .iter()
                .map(|f| l1_on(&f[level][i], &f[level + 1][i], g.a, g.b, |v| v))
                .collect();
            let (mean, se) = mean_se(&d);
            if t >= tau - 1e-12 && mean > sup.0 {
                sup = (mean, se);
            }
            means.push(mean);
        }
        let (mut integrated, mut head) = (0.0, 0.0);
        for i in 1..times.len() {
            let piece = 0.5 * (times[i] - times[i - 1]) * (means[i] + means[i - 1]);
            integrated += piece;
            if times[i] <= tau + 1e-12 {
                head += piece;
            }
        }
        table.rows.push(CauchyRow {
            epsilon: cfg.ladder[level],
            epsilon_next: cfg.ladder[level + 1],
            sup_l1: sup.0.max(0.0),
            sup_l1_std_error: sup.1,
            integrated_l1: integrated,
            integrated_head: head,
        });
    }
    Ok(table)
}
