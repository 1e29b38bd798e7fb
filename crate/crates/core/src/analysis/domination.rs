use serde::{Deserialize, Serialize};

use crate::barenblatt::BarenblattProfile;
use crate::brownian::MollifiedPath;
use crate::error::{Result, SpmeError};
use crate::solver::{DensityField, SolveTrace};
use crate::transforms::{ambient_margin, flow_frame, to_pressure, ExtendedField, FrameMode};

/// One trace to check together with the mollified path that drove it.
pub struct DominationRun<'a> {
    pub trace: &'a SolveTrace,
    pub mpath: &'a MollifiedPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub checkpoints: Vec<f64>,
    /// Allowance `5h`.
    pub tol: f64,
    /// Largest `p - B` over all runs, checkpoints and ambient cells.
    pub max_excess: f64,
    /// Linear-interpolation allowance of the frame change: the largest jump
    /// of the transformed pressure between neighbouring cells (zero for `nu = 0`).
    pub interpolation_bound: f64,
    /// Cells with `p > B + tol + interpolation_bound`.
    pub violations: usize,
    /// `max (p - B)` per run.
    pub per_run: Vec<f64>,
}

impl DominationReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Transformed pressure of each run (floor removed, moved to the frame
/// following `nu B^eps`) against the Barenblatt pressure at each checkpoint.
pub fn barenblatt_domination(
    runs: &[DominationRun<'_>],
    profile: &BarenblattProfile,
    checkpoints: &[f64],
) -> Result<DominationReport> {
    let mut report = DominationReport {
        checkpoints: checkpoints.to_vec(),
        tol: 0.0,
        max_excess: f64::NEG_INFINITY,
        interpolation_bound: 0.0,
        violations: 0,
        per_run: Vec::new(),
    };
    for run in runs {
        let trace = run.trace;
        let cfg = &trace.config;
        let g = cfg.grid;
        let h = g.h();
        report.tol = report.tol.max(5.0 * h);
        let eps = trace.epsilon();
        let u0 = trace.snapshots[0].minus_floor(eps);
        if let Some(j) = (0..g.n)
            .find(|&j| u0.values[j] > 0.0 && profile.eval_density(g.x(j), 0.0) <= u0.values[j])
        {
            return Err(SpmeError::config(format!(
                "profile does not strictly dominate u0 at x = {}",
                g.x(j)
            )));
        }
        let snaps: Vec<&DensityField> = checkpoints
            .iter()
            .map(|&t| {
                trace
                    .snapshots
                    .iter()
                    .find(|s| (s.time - t).abs() <= 1e-9 * (1.0 + t))
                    .ok_or_else(|| {
                        SpmeError::config(format!("checkpoint {t} is not a snapshot time"))
                    })
            })
            .collect::<Result<_>>()?;
        let margin = ambient_margin(run.mpath, cfg.nu, h);
        let extended = snaps
            .iter()
            .map(|s| ExtendedField::extend(&s.minus_floor(eps), margin, 0.0))
            .collect::<Result<Vec<_>>>()?;
        let moved = flow_frame(&extended, run.mpath, cfg.nu, FrameMode::ToMoving)?;
        let mut worst = f64::NEG_INFINITY;
        for f in &moved {
            let p = to_pressure(f, cfg.m)?;
            let jump = if cfg.nu > 0.0 {
                p.values
                    .windows(2)
                    .fold(0.0_f64, |acc, w| acc.max((w[1] - w[0]).abs()))
            } else {
                0.0
            };
            report.interpolation_bound = report.interpolation_bound.max(jump);
            for (j, pj) in p.values.iter().enumerate() {
                let excess = pj - profile.eval_pressure(p.grid.x(j), f.time);
                worst = worst.max(excess);
                if excess > 5.0 * h + jump {
                    report.violations += 1;
                }
            }
        }
        report.max_excess = report.max_excess.max(worst);
        report.per_run.push(worst);
    }
    Ok(report)
}
