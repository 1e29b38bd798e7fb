use serde::{Deserialize, Serialize};

use super::{Grid1D, SolverConfig};
use crate::error::{Result, SpmeError};

/// Smooth compactly supported test function
/// `phi(x) = exp(1 - 1/(1 - s^2))`, `s = (x - center) / half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: f64,
    pub half_width: f64,
}

impl TestFunction {
    pub fn new(center: f64, half_width: f64) -> Self {
        Self { center, half_width }
    }

    fn s(&self, x: f64) -> f64 {
        (x - self.center) / self.half_width
    }

    pub fn value(&self, x: f64) -> f64 {
        let s = self.s(x);
        if s.abs() >= 1.0 {
            return 0.0;
        }
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }

    pub fn gradient(&self, x: f64) -> f64 {
        let s = self.s(x);
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - s * s;
        let g1 = -2.0 * s / (q * q);
        g1 * self.value(x) / self.half_width
    }

    pub fn laplacian(&self, x: f64) -> f64 {
        let s = self.s(x);
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - s * s;
        let g1 = -2.0 * s / (q * q);
        let g2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
        (g2 + g1 * g1) * self.value(x) / (self.half_width * self.half_width)
    }

    /// Support must stay strictly inside the grid interval.
    pub fn check_inside(&self, grid: Grid1D) -> Result<()> {
        let (lo, hi) = (self.center - self.half_width, self.center + self.half_width);
        if !(self.half_width > 0.0) || lo <= grid.a || hi >= grid.b {
            return Err(SpmeError::config(format!(
                "test function support [{lo}, {hi}] is not inside ({}, {})",
                grid.a, grid.b
            )));
        }
        Ok(())
    }
}

/// Cumulative weak-form terms for every probe at one snapshot time:
///
/// * `pairing`   = `int u(T) phi`
/// * `diffusion` = `int_0^T int u^m phi''`
/// * `linear`    = `int_0^T int u phi''`
/// * `ito`       = left-point sum of `(int nu u phi') dB` over solver steps
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakFormSample {
    pub t: f64,
    pub pairing: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub linear: Vec<f64>,
    pub ito: Vec<f64>,
}

/// Tabulated test functions plus running integrals.
pub(crate) struct Ledger {
    h: f64,
    phi: Vec<Vec<f64>>,
    dphi: Vec<Vec<f64>>,
    ddphi: Vec<Vec<f64>>,
    diffusion: Vec<f64>,
    linear: Vec<f64>,
    ito: Vec<f64>,
}

impl Ledger {
    pub(crate) fn new(probes: &[TestFunction], grid: Grid1D) -> Self {
        let xs = grid.centers();
        let tab = |f: &dyn Fn(&TestFunction, f64) -> f64| -> Vec<Vec<f64>> {
            probes
                .iter()
                .map(|p| xs.iter().map(|&x| f(p, x)).collect())
                .collect()
        };
        Self {
            h: grid.h(),
            phi: tab(&|p, x| p.value(x)),
            dphi: tab(&|p, x| p.gradient(x)),
            ddphi: tab(&|p, x| p.laplacian(x)),
            diffusion: vec![0.0; probes.len()],
            linear: vec![0.0; probes.len()],
            ito: vec![0.0; probes.len()],
        }
    }

    /// Adds one solver step of length `dt` taken from state `u` (with
    /// `w = u^m`, already filled by the step) and Brownian increment `db`.
    pub(crate) fn accumulate(
        &mut self,
        u: &[f64],
        w: &[f64],
        config: &SolverConfig,
        dt: f64,
        db: f64,
    ) {
        for k in 0..self.phi.len() {
            let (mut d, mut l, mut g) = (0.0, 0.0, 0.0);
            for j in 0..u.len() {
                d += w[j] * self.ddphi[k][j];
                l += u[j] * self.ddphi[k][j];
                g += u[j] * self.dphi[k][j];
            }
            self.diffusion[k] += dt * self.h * d;
            self.linear[k] += dt * self.h * l;
            self.ito[k] += config.nu * self.h * g * db;
        }
    }

    pub(crate) fn sample(&self, t: f64, u: &[f64]) -> WeakFormSample {
        let pairing = self
            .phi
            .iter()
            .map(|phi| self.h * phi.iter().zip(u).map(|(p, v)| p * v).sum::<f64>())
            .collect();
        WeakFormSample {
            t,
            pairing,
            diffusion: self.diffusion.clone(),
            linear: self.linear.clone(),
            ito: self.ito.clone(),
        }
    }
}
