use serde::{Deserialize, Serialize};

use crate::brownian::BrownianPath;
use crate::error::{Result, SpmeError};
use crate::solver::SolveTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakFormRow {
    pub t: f64,
    pub probe: usize,
    /// `int u(T) phi - int u(0) phi`.
    pub lhs: f64,
    /// `int_0^T int (u^m + nu^2 u / 2) phi'' - sum (int nu u phi') dB`.
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakFormTable {
    pub rows: Vec<WeakFormRow>,
}

impl WeakFormTable {
    /// Largest `|residual|` of one probe over all checkpoints.
    pub fn max_abs(&self, probe: usize) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.probe == probe)
            .fold(0.0, |acc, r| acc.max(r.residual.abs()))
    }
}

/// Weak-form (Ito) residual of a trace solved with probes, at the snapshot
/// times in `checkpoints`. The stochastic integral is the left-point sum over
/// solver steps accumulated during the solve against increments of `path`.
pub fn weak_form_residual(
    trace: &SolveTrace,
    path: &BrownianPath,
    checkpoints: &[f64],
) -> Result<WeakFormTable> {
    if trace.probes.is_empty() || trace.weak_form.is_empty() {
        return Err(SpmeError::config("trace was solved without test functions"));
    }
    for p in &trace.probes {
        p.check_inside(trace.config.grid)?;
    }
    if trace.config.nu > 0.0 && path.digest() != trace.path_digest {
        return Err(SpmeError::Integrity(
            "trace was driven by a different path".into(),
        ));
    }
    let nu = trace.config.nu;
    let start = &trace.weak_form[0];
    let mut rows = Vec::new();
    for &t in checkpoints {
        let sample = trace
            .weak_form
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9 * (1.0 + t))
            .ok_or_else(|| SpmeError::config(format!("checkpoint {t} is not a snapshot time")))?;
        for k in 0..trace.probes.len() {
            let lhs = sample.pairing[k] - start.pairing[k];
            let rhs = sample.diffusion[k] + 0.5 * nu * nu * sample.linear[k] - sample.ito[k];
            rows.push(WeakFormRow {
                t,
                probe: k,
                lhs,
                rhs,
                residual: lhs - rhs,
            });
        }
    }
    Ok(WeakFormTable { rows })
}
