use serde::{Deserialize, Serialize};

use crate::barenblatt::BarenblattProfile;
use crate::brownian::{mollify, BrownianPath};
use crate::error::Result;
use crate::solver::{initial_density, solve, DensityField, Grid1D, Profile, SolverConfig};

/// One named inequality with its measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    /// `"<="` or `">="`.
    pub relation: String,
    pub passed: bool,
}

impl Assertion {
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            relation: "<=".into(),
            passed: measured <= threshold,
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            relation: ">=".into(),
            passed: measured >= threshold,
        }
    }
}

/// Outermost cell faces where `u - floor > tol`; `None` if nothing exceeds it.
pub fn detect_free_boundary(field: &DensityField, floor: f64, tol: f64) -> Option<(f64, f64)> {
    let g = field.grid;
    let h = g.h();
    let above = |j: &usize| field.values[*j] - floor > tol;
    let lo = (0..g.n).find(above)?;
    let hi = (0..g.n).rev().find(above)?;
    Some((g.x(lo) - 0.5 * h, g.x(hi) + 0.5 * h))
}

/// Deterministic solve from a Barenblatt slice against the analytic solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarenblattCheck {
    pub m: f64,
    pub c: f64,
    pub t0: f64,
    pub domain: (f64, f64),
    pub n: usize,
    pub t_end: f64,
    pub epsilon: f64,
    /// L1 tolerance as a fraction of the total mass.
    pub l1_rel_tol: f64,
    /// Front tolerance `max(front_cells h, front_rel_tol r)`.
    pub front_rel_tol: f64,
    pub front_cells: f64,
}

impl Default for BarenblattCheck {
    fn default() -> Self {
        Self {
            m: 2.0,
            c: 1.0,
            t0: 0.1,
            domain: (-2.0, 2.0),
            n: 400,
            t_end: 0.4,
            epsilon: 1e-3,
            l1_rel_tol: 1.5e-2,
            front_rel_tol: 0.03,
            front_cells: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarenblattReport {
    pub profile: BarenblattProfile,
    pub l1_error: f64,
    pub mass: f64,
    pub radius: f64,
    pub front: Option<(f64, f64)>,
    pub front_error: f64,
    pub steps: usize,
    pub assertions: Vec<Assertion>,
}

impl BarenblattReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

/// Solves with `nu = 0` from the time-zero slice and compares the final field,
/// floor removed, with the delayed Barenblatt density.
pub fn barenblatt_check(cfg: &BarenblattCheck) -> Result<BarenblattReport> {
    let g = Grid1D::new(cfg.domain.0, cfg.domain.1, cfg.n)?;
    let center = g.midpoint();
    let profile = BarenblattProfile::new(cfg.m, cfg.c, cfg.t0, center)?;
    let u0 = initial_density(&Profile::Barenblatt(profile), g)?;
    let solver = SolverConfig::new(cfg.m, 0.0, cfg.epsilon, g, cfg.t_end);
    let dt = cfg.epsilon / 4.0;
    let samples = (cfg.t_end / dt).ceil() as usize + 1;
    let path = BrownianPath::from_values(dt, vec![0.0; samples], 0)?;
    let trace = solve(&solver, &mollify(&path, cfg.epsilon)?, &u0, cfg.t_end)?;
    let last = trace.final_field().minus_floor(cfg.epsilon);
    let exact = profile.sample(&last, last.time);
    let mass = exact.mass();
    let l1_error = last.l1_distance(&exact)?;
    let radius = profile.free_boundary(last.time);
    let h = g.h();
    // the floor is subtracted exactly; anything above round-off is support
    let front = detect_free_boundary(&last, 0.0, 1e-3 * u0.max());
    let front_error = match front {
        Some((lo, hi)) => ((hi - center) - radius)
            .abs()
            .max(((center - lo) - radius).abs()),
        None => f64::INFINITY,
    };
    let assertions = vec![
        Assertion::at_most("l1_error", l1_error, cfg.l1_rel_tol * mass),
        Assertion::at_most(
            "free_boundary_error",
            front_error,
            (cfg.front_cells * h).max(cfg.front_rel_tol * radius),
        ),
    ];
    Ok(BarenblattReport {
        profile,
        l1_error,
        mass,
        radius,
        front,
        front_error,
        steps: trace.steps.len(),
        assertions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn front_of_a_box() {
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        let f = DensityField::new(
            g,
            0.0,
            (0..10)
                .map(|j| if (3..7).contains(&j) { 1.0 } else { 0.1 })
                .collect(),
        )
        .unwrap();
        let (lo, hi) = detect_free_boundary(&f, 0.1, 1e-9).unwrap();
        assert!((lo - 0.3).abs() < 1e-12 && (hi - 0.7).abs() < 1e-12);
        assert!(detect_free_boundary(&f, 2.0, 0.0).is_none());
    }

    #[test]
    fn assertion_relations() {
        assert!(Assertion::at_most("a", 1.0, 1.0).passed);
        assert!(!Assertion::at_most("a", 1.1, 1.0).passed);
        assert!(Assertion::at_least("a", 1.0, 1.0).passed);
        assert!(!Assertion::at_least("a", f64::NAN, 1.0).passed);
    }

    #[test]
    fn coarse_barenblatt_check_passes() {
        let cfg = BarenblattCheck {
            n: 200,
            ..BarenblattCheck::default()
        };
        let r = barenblatt_check(&cfg).unwrap();
        assert!(r.passed(), "{r:?}");
        // r(0.4) = sqrt(6) 0.5^(1/3)
        assert!((r.radius - 6f64.sqrt() * 0.5f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }
}
