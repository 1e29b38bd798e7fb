use serde::{Deserialize, Serialize};

use super::{l1_on, mean_se, power_law_fit, run_ladder, LadderConfig};
use crate::error::{Result, SpmeError};
use crate::solver::{initial_density, SolveOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionPair {
    pub epsilon: f64,
    pub epsilon_hat: f64,
    /// `sup_{T >= kappa} mean_paths int_K |kappa v u_eps - kappa v u_eps_hat|`.
    pub distance: f64,
    /// Standard error across paths at the maximizing time.
    pub std_error: f64,
    /// Time attaining the supremum.
    pub t_sup: f64,
    /// Same functional without truncation.
    pub plain_distance: f64,
    /// `int_K |kappa v (u0 + eps) - kappa v (u0 + eps_hat)|`.
    pub initial_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub kappa: f64,
    pub k_interval: (f64, f64),
    pub n_paths: usize,
    pub pairs: Vec<ContractionPair>,
    /// Slope of `log distance` against `log (eps v eps_hat)`; reported only.
    pub theta_fit: Option<f64>,
    pub path_digests: Vec<String>,
}

/// Compares every ladder level with the smallest one on common noise.
pub fn contraction_experiment(
    cfg: &LadderConfig,
    kappa: f64,
    k: (f64, f64),
) -> Result<ContractionReport> {
    cfg.validate()?;
    let g = cfg.solver.grid;
    if !(kappa > 0.0 && kappa < 1.0_f64.min(cfg.solver.t_end)) {
        return Err(SpmeError::config(format!(
            "kappa must lie in (0, min(1, T*)), got {kappa}"
        )));
    }
    if let Some(e) = cfg.ladder.iter().find(|e| **e > 0.5 * kappa) {
        return Err(SpmeError::Precondition(format!(
            "epsilon {e} exceeds kappa/2 = {}",
            0.5 * kappa
        )));
    }
    if !(g.a < k.0 && k.0 < k.1 && k.1 < g.b) {
        return Err(SpmeError::Precondition(format!(
            "K = [{}, {}] must lie strictly inside ({}, {})",
            k.0, k.1, g.a, g.b
        )));
    }
    let runs = run_ladder(cfg, &SolveOptions::every(cfg.snapshot_stride))?;
    let last = cfg.ladder.len() - 1;
    let shifted: Vec<Vec<_>> = runs
        .iter()
        .map(|r| {
            (0..cfg.ladder.len())
                .map(|l| r.shifted(l))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let times = runs[0].traces[last].snapshot_times();
    let trunc = |v: f64| v.max(kappa);
    let u0 = initial_density(&cfg.profile, g)?;

    let mut pairs = Vec::new();
    for level in 0..last {
        let (eps, eps_hat) = (cfg.ladder[level], cfg.ladder[last]);
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        let mut plain_best = 0.0_f64;
        for (i, &t) in times.iter().enumerate() {
            if t < kappa - 1e-12 {
                continue;
            }
            let mut truncated = Vec::with_capacity(runs.len());
            let mut plain = Vec::with_capacity(runs.len());
            for fields in &shifted {
                let (a, b) = (&fields[level][i], &fields[last][i]);
                let d = l1_on(a, b, k.0, k.1, trunc);
                let p = l1_on(a, b, k.0, k.1, |v| v);
                if d > p * (1.0 + 1e-12) + 1e-15 {
                    return Err(SpmeError::Integrity(format!(
                        "truncated distance {d} exceeds plain {p}"
                    )));
                }
                truncated.push(d);
                plain.push(p);
            }
            let (mean, se) = mean_se(&truncated);
            if mean > best.0 {
                best = (mean, se, t);
            }
            plain_best = plain_best.max(mean_se(&plain).0);
        }
        let initial_term = l1_on(
            &u0.plus_constant(eps),
            &u0.plus_constant(eps_hat),
            k.0,
            k.1,
            trunc,
        );
        pairs.push(ContractionPair {
            epsilon: eps,
            epsilon_hat: eps_hat,
            distance: best.0.max(0.0),
            std_error: best.1,
            t_sup: best.2,
            plain_distance: plain_best,
            initial_term,
        });
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.epsilon.max(p.epsilon_hat)).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.distance).collect();
    Ok(ContractionReport {
        kappa,
        k_interval: k,
        n_paths: cfg.n_paths,
        pairs,
        theta_fit: power_law_fit(&xs, &ys).map(|(p, _)| p),
        path_digests: runs.iter().map(|r| r.path.digest()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::small_ladder;
    use super::*;
    use crate::solver::Profile;

    #[test]
    fn rejects_epsilon_above_half_kappa() {
        let cfg = small_ladder(vec![0.08, 0.04], 1);
        let err = contraction_experiment(&cfg, 0.1, (-0.5, 0.5)).unwrap_err();
        assert!(matches!(err, SpmeError::Precondition(_)));
    }

    #[test]
    fn zero_data_gives_zero_distance_and_initial_term() {
        let mut cfg = small_ladder(vec![0.08, 0.04, 0.02], 2);
        cfg.profile = Profile::Zero;
        let r = contraction_experiment(&cfg, 0.16, (-0.5, 0.5)).unwrap();
        for p in &r.pairs {
            assert_eq!(p.initial_term, 0.0);
            assert_eq!(p.distance, 0.0);
            assert!(p.plain_distance > 0.0);
        }
    }

    #[test]
    fn truncated_distance_bounded_by_plain() {
        let cfg = small_ladder(vec![0.08, 0.04, 0.02], 2);
        let r = contraction_experiment(&cfg, 0.16, (-0.5, 0.5)).unwrap();
        assert_eq!(r.pairs.len(), 2);
        for p in &r.pairs {
            assert!(p.distance <= p.plain_distance + 1e-15);
            assert!(p.distance >= 0.0);
            assert!(p.t_sup >= 0.16 - 1e-12);
        }
        assert_eq!(r.path_digests.len(), 2);
    }
}
