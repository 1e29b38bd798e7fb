//! Delayed Barenblatt (ZKB) solutions of `u_t = (u^m)_xx` in one dimension.
//!
//! Written in the pressure variable `p = m/(m-1) u^(m-1)`. With `tau = t + t0`,
//! `alpha = 1/(m+1)` and `k = alpha / 2`:
//!
//! ```text
//! p(x, t) = tau^(-alpha (m-1)) * (C - k xi^2 tau^(-2 alpha))_+,   xi = x - center
//! u(x, t) = ((m-1) p / m)^(1/(m-1))
//! r(t)    = sqrt(C/k) * tau^alpha
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpmeError};
use crate::solver::DensityField;
use crate::transforms::density_of;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarenblattProfile {
    pub m: f64,
    /// Pressure amplitude constant `C`.
    pub c: f64,
    /// Delay `t0 > 0`.
    pub t0: f64,
    pub center: f64,
}

impl BarenblattProfile {
    pub fn new(m: f64, c: f64, t0: f64, center: f64) -> Result<Self> {
        if !(m > 1.0) {
            return Err(SpmeError::config(format!(
                "exponent m must exceed 1, got {m}"
            )));
        }
        if !(c > 0.0) || !(t0 > 0.0) {
            return Err(SpmeError::config("Barenblatt needs C > 0 and t0 > 0"));
        }
        Ok(Self { m, c, t0, center })
    }

    pub fn alpha(&self) -> f64 {
        1.0 / (self.m + 1.0)
    }

    pub fn k(&self) -> f64 {
        0.5 * self.alpha()
    }

    /// `C - k xi^2 tau^(-2 alpha)` before the positive part.
    fn core(&self, x: f64, tau: f64) -> f64 {
        let xi = x - self.center;
        self.c - self.k() * xi * xi * tau.powf(-2.0 * self.alpha())
    }

    pub fn eval_density(&self, x: f64, t: f64) -> f64 {
        density_of(self.eval_pressure(x, t), self.m)
    }

    pub fn eval_pressure(&self, x: f64, t: f64) -> f64 {
        let tau = t + self.t0;
        let q = self.core(x, tau);
        if q <= 0.0 {
            return 0.0;
        }
        tau.powf(-self.alpha() * (self.m - 1.0)) * q
    }

    /// Free-boundary half-width `r(t)`.
    pub fn free_boundary(&self, t: f64) -> f64 {
        (self.c / self.k()).sqrt() * (t + self.t0).powf(self.alpha())
    }

    /// Samples the density on the grid of `like` at time `t`.
    pub fn sample(&self, like: &DensityField, t: f64) -> DensityField {
        DensityField {
            grid: like.grid,
            time: t,
            values: like
                .grid
                .centers()
                .into_iter()
                .map(|x| self.eval_density(x, t))
                .collect(),
        }
    }

    /// Profile whose free boundary at `t = 0` sits at `center +- half_width`.
    pub fn with_initial_radius(m: f64, t0: f64, center: f64, half_width: f64) -> Result<Self> {
        let probe = Self::new(m, 1.0, t0, center)?;
        let c = probe.k() * half_width * half_width * t0.powf(-2.0 * probe.alpha());
        Self::new(m, c, t0, center)
    }
}

/// Fraction of `max u0` by which the returned profile must exceed `u0`.
pub const DOMINATION_MARGIN: f64 = 0.01;

const T0_LOWER: f64 = 1e-12;
const T0_UPPER: f64 = 1e6;

/// Profile with free boundary at `ends` at `t = 0` that exceeds `u0` by at
/// least 1% of `max u0` on the support of `u0`. Among such profiles the one with
/// the largest delay (slowest spreading) is returned; the search is a bisection
/// on `t0` with `C` pinned by the free-boundary constraint.
pub fn dominating_profile(
    u0: &DensityField,
    m: f64,
    ends: (f64, f64),
) -> Result<BarenblattProfile> {
    let (a, b) = ends;
    if !(a < b) {
        return Err(SpmeError::config(format!("interval ({a}, {b}) is empty")));
    }
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let peak = u0.max().max(0.0);
    let margin = DOMINATION_MARGIN * peak;
    let support: Vec<(f64, f64)> = u0
        .grid
        .centers()
        .into_iter()
        .zip(u0.values.iter().copied())
        .filter(|(_, u)| *u > 0.0)
        .collect();
    if let Some((x, _)) = support.iter().find(|(x, _)| *x <= a || *x >= b) {
        return Err(SpmeError::Precondition(format!(
            "initial density is positive at x = {x}, outside ({a}, {b})"
        )));
    }

    // worst point for a candidate delay, or None when it dominates everywhere
    let binding = |t0: f64| -> Result<Option<(f64, f64)>> {
        let prof = BarenblattProfile::with_initial_radius(m, t0, center, half)?;
        Ok(support
            .iter()
            .map(|&(x, u)| (x, prof.eval_density(x, 0.0) - u - margin))
            .filter(|(_, gap)| *gap < 0.0)
            .min_by(|l, r| l.1.total_cmp(&r.1)))
    };

    if binding(T0_UPPER)?.is_none() {
        return BarenblattProfile::with_initial_radius(m, T0_UPPER, center, half);
    }
    if let Some((x, gap)) = binding(T0_LOWER)? {
        return Err(SpmeError::SearchFailure(format!(
            "no delay in [{T0_LOWER}, {T0_UPPER}] dominates: binding point x = {x} (deficit {})",
            -gap
        )));
    }
    let (mut lo, mut hi) = (T0_LOWER.ln(), T0_UPPER.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binding(mid.exp())?.is_none() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    BarenblattProfile::with_initial_radius(m, lo.exp(), center, half)
}

/// Support-rate constant with the log-spaced check that backs it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportRate {
    /// `M` with `r(t) <= r(0) + M t^(1/(m+1))` for all `t >= 0`.
    pub m_bar: f64,
    pub samples: usize,
    /// `min_t (r(0) + M t^alpha - r(t))` over the samples; non-negative when the
    /// certificate holds.
    pub min_slack: f64,
    pub holds: bool,
}

/// `M = sqrt(C/k)`: the ratio `((t+t0)^a - t0^a) / t^a` is at most 1 by
/// subadditivity of `t^a` and tends to 1, so this is the smallest valid
/// constant.
pub fn support_rate_constant(profile: &BarenblattProfile) -> SupportRate {
    let m_bar = (profile.c / profile.k()).sqrt();
    let alpha = profile.alpha();
    let r0 = profile.free_boundary(0.0);
    let samples = 241;
    let min_slack = (0..samples)
        .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (samples - 1) as f64))
        .map(|t| r0 + m_bar * t.powf(alpha) - profile.free_boundary(t))
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (1.0 + m_bar);
    SupportRate {
        m_bar,
        samples,
        min_slack,
        holds: min_slack >= -tol,
    }
}

/// Oracle curves on `[lo, hi]` for plotting: `(x, u, p)`.
pub fn oracle_curve(
    profile: &BarenblattProfile,
    t: f64,
    lo: f64,
    hi: f64,
    points: usize,
) -> Vec<[f64; 3]> {
    (0..points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64;
            [x, profile.eval_density(x, t), profile.eval_pressure(x, t)]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{initial_density, Grid1D, Profile};
    use crate::testutil::adaptive_simpson;
    use crate::transforms::pressure_of;

    fn unit() -> BarenblattProfile {
        BarenblattProfile::new(2.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn center_value_and_cutoff() {
        let p = unit();
        assert!((p.alpha() - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.k() - 1.0 / 6.0).abs() < 1e-15);
        assert!((p.eval_pressure(0.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((p.eval_density(0.0, 0.0) - 0.5).abs() < 1e-15);
        let r = p.free_boundary(0.5);
        assert_eq!(p.eval_density(r * 1.0000001, 0.5), 0.0);
        assert_eq!(p.eval_density(-r * 1.5, 0.5), 0.0);
        assert_eq!(p.eval_pressure(r * 1.01, 0.5), 0.0);
    }

    #[test]
    fn pressure_vanishes_at_free_boundary() {
        let p = BarenblattProfile::new(2.0, 4.0, 1.0, 0.0).unwrap();
        // r(0) = sqrt(C/k) = sqrt(24); with t = 0 and t0 = 1 the core is exactly 0
        let r = p.free_boundary(0.0);
        assert!(p.eval_pressure(r, 0.0).abs() < 1e-12);
    }

    #[test]
    fn pressure_matches_transformed_density() {
        for m in [1.5, 2.0, 3.0] {
            let p = BarenblattProfile::new(m, 0.7, 0.3, 0.1).unwrap();
            for i in 0..50 {
                let x = -2.0 + 0.08 * i as f64;
                for t in [0.0, 0.4, 2.0] {
                    let lhs = p.eval_pressure(x, t);
                    let rhs = pressure_of(p.eval_density(x, t), m);
                    assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
                }
            }
        }
    }

    #[test]
    fn mass_is_conserved() {
        let p = unit();
        let masses: Vec<f64> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&t| {
                let r = p.free_boundary(t);
                adaptive_simpson(&|x| p.eval_density(x, t), -r, r, 1e-12)
            })
            .collect();
        for m in &masses[1..] {
            assert!((m - masses[0]).abs() < 1e-6, "{masses:?}");
        }
    }

    /// Central-difference residual of `u_t - (u^m)_xx` on points well inside the support.
    fn residual_max(p: &BarenblattProfile, h: f64) -> f64 {
        let t = 0.5;
        let dt = h;
        let r = p.free_boundary(t);
        let mut worst = 0.0_f64;
        let mut x = -r + 3.0 * h.max(0.1);
        while x < r - 3.0 * h.max(0.1) {
            let ut = (p.eval_density(x, t + dt) - p.eval_density(x, t - dt)) / (2.0 * dt);
            let w = |y: f64| p.eval_density(y, t).powf(p.m);
            let wxx = (w(x + h) - 2.0 * w(x) + w(x - h)) / (h * h);
            worst = worst.max((ut - wxx).abs());
            x += 0.05;
        }
        worst
    }

    #[test]
    fn satisfies_pme_with_second_order_residual() {
        for m in [2.0, 3.0] {
            let p = BarenblattProfile::new(m, 1.0, 1.0, 0.0).unwrap();
            let r1 = residual_max(&p, 0.02);
            let r2 = residual_max(&p, 0.01);
            let ratio = r1 / r2;
            assert!(ratio > 3.5 && ratio < 4.5, "m = {m}: ratio {ratio}");
        }
    }

    #[test]
    fn self_similar_scaling() {
        let p = BarenblattProfile::new(2.0, 1.0, 0.5, 0.0).unwrap();
        let a = p.alpha();
        for lambda in [2.0_f64, 10.0] {
            for i in 0..40 {
                let x = -3.0 + 0.15 * i as f64;
                for t in [0.0, 0.3, 1.7] {
                    let tau = t + p.t0;
                    let lhs = p.eval_density(x, t);
                    let rhs =
                        lambda.powf(a) * p.eval_density(lambda.powf(a) * x, lambda * tau - p.t0);
                    assert!((lhs - rhs).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn dominating_profile_of_zero_field() {
        let g = Grid1D::new(-1.0, 1.0, 64).unwrap();
        let u0 = initial_density(&Profile::Zero, g).unwrap();
        let p = dominating_profile(&u0, 2.0, (-1.0, 1.0)).unwrap();
        assert!((p.free_boundary(0.0) - 1.0).abs() < 1e-10);
        assert!(p.eval_density(0.0, 0.0) > 0.0);
    }

    #[test]
    fn dominating_profile_of_half_height_bump() {
        let g = Grid1D::new(-1.0, 1.0, 256).unwrap();
        let reference = BarenblattProfile::with_initial_radius(2.0, 0.2, 0.0, 1.0).unwrap();
        let height = 0.5 * reference.eval_density(0.0, 0.0);
        let bump = Profile::Bump {
            center: 0.0,
            half_width: 0.5,
            height,
        };
        let u0 = initial_density(&bump, g).unwrap();
        let p = dominating_profile(&u0, 2.0, (-1.0, 1.0)).unwrap();
        assert!((p.free_boundary(0.0) - 1.0).abs() < 1e-10);
        let margin = DOMINATION_MARGIN * u0.max();
        for (j, u) in u0.values.iter().enumerate() {
            let x = g.x(j);
            assert!(p.eval_density(x, 0.0) > *u, "x = {x}");
            if *u > 0.0 {
                assert!(p.eval_density(x, 0.0) - u >= margin * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn dominating_profile_reports_binding_point() {
        let g = Grid1D::new(-1.0, 1.0, 256).unwrap();
        let mut values = vec![0.0; 256];
        values[1] = 1e15; // huge spike right next to the boundary
        let u0 = DensityField::new(g, 0.0, values).unwrap();
        match dominating_profile(&u0, 2.0, (-1.0, 1.0)) {
            Err(SpmeError::SearchFailure(msg)) => assert!(msg.contains("binding point")),
            other => panic!("expected search failure, got {other:?}"),
        }
    }

    #[test]
    fn support_rate_for_unit_profile() {
        let s = support_rate_constant(&unit());
        assert!((s.m_bar - 6f64.sqrt()).abs() < 1e-12);
        assert!(s.holds);
        assert!(s.min_slack >= -1e-12);
    }

    #[test]
    fn support_rate_certificate_with_long_delay() {
        let p = BarenblattProfile::with_initial_radius(2.0, 1e5, 0.0, 1.0).unwrap();
        assert!(support_rate_constant(&p).holds);
    }

    #[test]
    fn concave_power_is_subadditive() {
        for alpha in [0.2, 1.0 / 3.0, 0.5, 0.9] {
            for t0 in [0.01, 1.0, 100.0] {
                for i in 0..60 {
                    let t = 10f64.powf(-3.0 + 0.1 * i as f64);
                    let lhs: f64 = (t + t0).powf(alpha) - t0.powf(alpha);
                    assert!(lhs <= t.powf(alpha) * (1.0 + 1e-14));
                }
            }
        }
    }
}
