//! Extinction detection, Brownian hitting times and the Monte Carlo comparison
//! of their distributions.
//!
//! The barrier is `L + M t^(1/(m+1))`. Under the `heuristic` convention the
//! displacement is `nu |B_t|`, under the `paper` convention `|B_t|`.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barenblatt::{dominating_profile, support_rate_constant};
use crate::brownian::{derive_seed, mollify_shared, sample_path, BrownianPath, Mollifier};
use crate::error::{Result, SpmeError};
use crate::io::{fmt_f64, sha256_hex, to_json_bytes};
use crate::solver::{initial_density, solve_with, Profile, SolveOptions, SolveTrace, SolverConfig};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Largest tolerated fraction of failed paths in a Monte Carlo run.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `|B_t| >= L + M t^(1/(m+1))`.
    Paper,
    /// `nu |B_t| >= L + M t^(1/(m+1))`.
    #[default]
    Heuristic,
}

impl Convention {
    pub fn other(self) -> Self {
        match self {
            Convention::Paper => Convention::Heuristic,
            Convention::Heuristic => Convention::Paper,
        }
    }
}

/// Hitting barrier `L + M t^(1/(m+1))` and the scale applied to `|B|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    pub length: f64,
    pub m_bar: f64,
    pub m: f64,
    pub nu: f64,
    pub convention: Convention,
}

impl Barrier {
    pub fn new(length: f64, m_bar: f64, m: f64, nu: f64, convention: Convention) -> Result<Self> {
        if !(length > 0.0) || !(m_bar > 0.0) || !(m > 1.0) || !(nu >= 0.0) {
            return Err(SpmeError::config(format!(
                "barrier needs L > 0, M > 0, m > 1, nu >= 0 (got {length}, {m_bar}, {m}, {nu})"
            )));
        }
        Ok(Self {
            length,
            m_bar,
            m,
            nu,
            convention,
        })
    }

    pub fn level(&self, t: f64) -> f64 {
        self.length + self.m_bar * t.max(0.0).powf(1.0 / (self.m + 1.0))
    }

    /// Factor on `|B|`; zero means the barrier is never reached.
    pub fn scale(&self) -> f64 {
        match self.convention {
            Convention::Paper => 1.0,
            Convention::Heuristic => self.nu,
        }
    }
}

/// First time `scale |B_t|` reaches the barrier on a sampled path, refined by
/// bisection on the linear interpolant inside the crossing interval. `None`
/// when the path never crosses.
pub fn hitting_time(path: &BrownianPath, barrier: &Barrier) -> Option<f64> {
    let s = barrier.scale();
    if s <= 0.0 {
        return None;
    }
    let v = path.values();
    let k = (1..v.len()).find(|&k| s * v[k].abs() >= barrier.level(path.time(k)))?;
    let (t0, t1) = (path.time(k - 1), path.time(k));
    let (b0, b1) = (v[k - 1], v[k]);
    let sign = b1.signum();
    let gap = |t: f64| s * sign * (b0 + (b1 - b0) * (t - t0) / (t1 - t0)) - barrier.level(t);
    let (mut lo, mut hi) = (t0, t1);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// First snapshot time with `max (u - fill) <= tol`, scanning the series in
/// order and checking that the indicator never switches back off.
pub fn detect_extinction_series(
    times: &[f64],
    deviations: &[f64],
    tol: f64,
) -> Result<Option<f64>> {
    if times.len() != deviations.len() {
        return Err(SpmeError::Shape(
            "one deviation per snapshot time required".into(),
        ));
    }
    let Some(first) = deviations.iter().position(|d| *d <= tol) else {
        return Ok(None);
    };
    if let Some(k) = (first..deviations.len()).find(|&k| deviations[k] > tol) {
        return Err(SpmeError::Integrity(format!(
            "extinct at t = {} but max deviation {} > {tol} at t = {}",
            times[first], deviations[k], times[k]
        )));
    }
    Ok(Some(times[first]))
}

/// Extinction time of a trace relative to its boundary value `eps`.
pub fn detect_extinction(trace: &SolveTrace, tol: f64) -> Result<Option<f64>> {
    let eps = trace.epsilon();
    let times: Vec<f64> = trace.snapshots.iter().map(|s| s.time).collect();
    let devs: Vec<f64> = trace
        .snapshots
        .iter()
        .map(|s| s.max_deviation(eps))
        .collect();
    detect_extinction_series(&times, &devs, tol)
}

/// Wilson score interval for `k` successes out of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wilson {
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Wilson {
    pub fn new(k: usize, n: usize) -> Self {
        if n == 0 {
            return Self {
                p: 0.0,
                lo: 0.0,
                hi: 1.0,
            };
        }
        let nf = n as f64;
        let p = k as f64 / nf;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / nf;
        let center = (p + z2 / (2.0 * nf)) / denom;
        let half = Z95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
        Self {
            p,
            lo: (center - half).clamp(0.0, p),
            hi: (center + half).clamp(p, 1.0),
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// `points` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return Err(SpmeError::config(format!(
            "log grid needs 0 < lo < hi and at least 2 points, got [{lo}, {hi}] x {points}"
        )));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == points {
                hi
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect())
}

/// Empirical CDF of possibly censored times at each horizon.
pub fn empirical_cdf(times: &[Option<f64>], horizons: &[f64]) -> Vec<Wilson> {
    horizons
        .iter()
        .map(|&t| {
            let k = times
                .iter()
                .filter(|x| matches!(x, Some(v) if *v <= t))
                .count();
            Wilson::new(k, times.len())
        })
        .collect()
}

/// Monte Carlo run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// `t_end` is replaced by the largest horizon.
    pub solver: SolverConfig,
    pub profile: Profile,
    pub n_paths: usize,
    pub horizons: Vec<f64>,
    pub master_seed: u64,
    #[serde(default)]
    pub convention: Convention,
    pub snapshot_stride: f64,
    /// Brownian sampling step; `None` means `eps / 4`.
    #[serde(default)]
    pub path_dt: Option<f64>,
    /// Support-rate constant; `None` derives it from the dominating Barenblatt profile.
    #[serde(default)]
    pub m_bar: Option<f64>,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(SpmeError::config(format!(
                "need at least 2 paths, got {}",
                self.n_paths
            )));
        }
        if self.horizons.is_empty()
            || self.horizons.iter().any(|t| !(*t > 0.0))
            || self.horizons.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(SpmeError::config(
                "horizons must be positive and strictly increasing",
            ));
        }
        if !(self.snapshot_stride > 0.0) {
            return Err(SpmeError::config("snapshot stride must be positive"));
        }
        self.effective_solver().validate()
    }

    pub fn t_max(&self) -> f64 {
        self.horizons.last().copied().unwrap_or(0.0)
    }

    pub fn path_dt(&self) -> f64 {
        self.path_dt.unwrap_or(self.solver.epsilon / 4.0)
    }

    fn effective_solver(&self) -> SolverConfig {
        SolverConfig {
            t_end: self.t_max(),
            ..self.solver.clone()
        }
    }

    pub fn digest(&self) -> Result<String> {
        Ok(sha256_hex(&serde_json::to_vec(self)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionRecord {
    pub index: usize,
    pub seed: u64,
    /// `None` when censored at the horizon or when the path failed.
    pub t_extinct: Option<f64>,
    /// Hitting time under the run's convention.
    pub t_hat: Option<f64>,
    /// Hitting time under the other convention.
    pub t_hat_other: Option<f64>,
    pub epsilon: f64,
    pub config_digest: String,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub p_ext: f64,
    pub p_ext_lo: f64,
    pub p_ext_hi: f64,
    pub p_hat: f64,
    pub p_hat_lo: f64,
    pub p_hat_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub rows: Vec<McRow>,
    /// `p_hat` under the other convention, per horizon.
    pub p_hat_other: Vec<f64>,
    pub n_paths: usize,
    pub n_failed: usize,
    pub m: f64,
    pub nu: f64,
    pub interval: (f64, f64),
    pub m_bar: f64,
    pub convention: Convention,
    pub config_digest: String,
}

impl McSummary {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "T", "p_ext", "p_ext_lo", "p_ext_hi", "p_hat", "p_hat_lo", "p_hat_hi",
        ])?;
        for r in &self.rows {
            out.write_record(
                [
                    r.t, r.p_ext, r.p_ext_lo, r.p_ext_hi, r.p_hat, r.p_hat_lo, r.p_hat_hi,
                ]
                .map(fmt_f64),
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        to_json_bytes(self)
    }
}

/// Per-path records as CSV; censored times are empty fields.
pub fn write_records_csv<W: Write>(w: W, records: &[ExtinctionRecord]) -> Result<()> {
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "index",
        "seed",
        "t_extinct",
        "t_hat",
        "t_hat_other",
        "epsilon",
        "failure",
    ])?;
    for r in records {
        out.write_record([
            r.index.to_string(),
            r.seed.to_string(),
            opt(r.t_extinct),
            opt(r.t_hat),
            opt(r.t_hat_other),
            fmt_f64(r.epsilon),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRun {
    pub summary: McSummary,
    pub records: Vec<ExtinctionRecord>,
}

impl McRun {
    /// Fraction of non-censored paths with `T_extinct <= T_hat + slack`.
    pub fn pathwise_fraction(&self, slack: f64) -> (usize, usize) {
        let eligible: Vec<_> = self
            .records
            .iter()
            .filter(|r| r.failure.is_none())
            .filter_map(|r| r.t_hat.map(|h| (h, r.t_extinct)))
            .filter(|(h, _)| *h <= self.summary.rows.last().map_or(0.0, |r| r.t))
            .collect();
        let ok = eligible
            .iter()
            .filter(|(h, e)| matches!(e, Some(t) if *t <= h + slack))
            .count();
        (ok, eligible.len())
    }
}

/// Support-rate constant of the Barenblatt profile dominating `u0` on the
/// solver interval.
pub fn support_constant_for(profile: &Profile, config: &SolverConfig) -> Result<f64> {
    let u0 = initial_density(profile, config.grid)?;
    let bar = dominating_profile(&u0, config.m, (config.grid.a, config.grid.b))?;
    Ok(support_rate_constant(&bar).m_bar)
}

/// Samples, mollifies and solves `n_paths` paths in parallel on the current
/// rayon pool and aggregates extinction and hitting-time distributions.
/// Results do not depend on scheduling: path `i` uses seed
/// `derive_seed(master_seed, i)` and records are merged in index order.
pub fn mc_extinction(config: &McConfig) -> Result<McRun> {
    config.validate()?;
    let solver = config.effective_solver();
    let u0 = initial_density(&config.profile, solver.grid)?;
    let m_bar = match config.m_bar {
        Some(v) => v,
        None => support_constant_for(&config.profile, &solver)?,
    };
    let length = solver.grid.length();
    let barrier = Barrier::new(length, m_bar, solver.m, solver.nu, config.convention)?;
    let other = Barrier {
        convention: config.convention.other(),
        ..barrier
    };
    let digest = config.digest()?;
    let kernel = Arc::new(Mollifier::default());
    let tol = solver.extinction_threshold(u0.max());
    let opts = SolveOptions {
        snapshot_stride: config.snapshot_stride,
        stop_when_extinct: Some(tol),
        probes: Vec::new(),
        record_steps: false,
    };

    let run_path = |index: usize| -> ExtinctionRecord {
        let seed = derive_seed(config.master_seed, index as u64);
        let mut record = ExtinctionRecord {
            index,
            seed,
            t_extinct: None,
            t_hat: None,
            t_hat_other: None,
            epsilon: solver.epsilon,
            config_digest: digest.clone(),
            failure: None,
        };
        let outcome = (|| -> Result<()> {
            let path = Arc::new(sample_path(config.t_max(), config.path_dt(), seed)?);
            record.t_hat = hitting_time(&path, &barrier);
            record.t_hat_other = hitting_time(&path, &other);
            let mpath = mollify_shared(path, solver.epsilon, Arc::clone(&kernel))?;
            let trace = solve_with(&solver, &mpath, &u0, &opts)?;
            record.t_extinct = detect_extinction(&trace, tol)?;
            Ok(())
        })();
        if let Err(e) = outcome {
            record.failure = Some(e.to_string());
            record.t_extinct = None;
        }
        record
    };
    let records: Vec<ExtinctionRecord> =
        (0..config.n_paths).into_par_iter().map(run_path).collect();

    let failed = records.iter().filter(|r| r.failure.is_some()).count();
    if failed as f64 > MAX_FAILURE_FRACTION * config.n_paths as f64 {
        return Err(SpmeError::TooManyFailures {
            failed,
            total: config.n_paths,
        });
    }
    let ok: Vec<&ExtinctionRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
    let ext = empirical_cdf(
        &ok.iter().map(|r| r.t_extinct).collect::<Vec<_>>(),
        &config.horizons,
    );
    let hat = empirical_cdf(
        &ok.iter().map(|r| r.t_hat).collect::<Vec<_>>(),
        &config.horizons,
    );
    let hat_other = empirical_cdf(
        &ok.iter().map(|r| r.t_hat_other).collect::<Vec<_>>(),
        &config.horizons,
    );
    let rows = config
        .horizons
        .iter()
        .zip(ext.iter().zip(&hat))
        .map(|(&t, (e, h))| McRow {
            t,
            p_ext: e.p,
            p_ext_lo: e.lo,
            p_ext_hi: e.hi,
            p_hat: h.p,
            p_hat_lo: h.lo,
            p_hat_hi: h.hi,
        })
        .collect();
    Ok(McRun {
        summary: McSummary {
            rows,
            p_hat_other: hat_other.iter().map(|w| w.p).collect(),
            n_paths: config.n_paths,
            n_failed: failed,
            m: solver.m,
            nu: solver.nu,
            interval: (solver.grid.a, solver.grid.b),
            m_bar,
            convention: config.convention,
            config_digest: digest,
        },
        records,
    })
}

/// Path-only hitting-time Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingMcConfig {
    pub barrier: Barrier,
    pub n_paths: usize,
    pub horizon: f64,
    /// Initial step; steps grow geometrically as `max(dt0, growth * t)`.
    pub dt0: f64,
    pub growth: f64,
    pub master_seed: u64,
}

/// First passage of `scale |B|` over the barrier for one path, simulated
/// exactly at geometrically growing times. Crossings between samples are
/// caught with the Brownian-bridge exceedance probability of the barrier
/// value at the step end.
fn hitting_time_streaming(cfg: &HittingMcConfig, seed: u64) -> Option<f64> {
    let s = cfg.barrier.scale();
    if s <= 0.0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut t, mut b) = (0.0_f64, 0.0_f64);
    while t < cfg.horizon {
        let dt = cfg.dt0.max(cfg.growth * t).min(cfg.horizon - t);
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.gen();
        let next = b + dt.sqrt() * z;
        let t1 = t + dt;
        let level = cfg.barrier.level(t1) / s;
        if next.abs() >= level {
            let t0 = t;
            let l0 = cfg.barrier.level(t0) / s;
            // linear interpolation of the gap between the two samples
            let g0 = l0 - b.abs();
            let g1 = level - next.abs();
            let w = if g0 - g1 > 0.0 { g0 / (g0 - g1) } else { 1.0 };
            return Some(t0 + w.clamp(0.0, 1.0) * dt);
        }
        let up = (-2.0 * (level - b) * (level - next) / dt).exp();
        let down = (-2.0 * (level + b) * (level + next) / dt).exp();
        if u < up + down {
            return Some(t + 0.5 * dt);
        }
        t = t1;
        b = next;
    }
    None
}

pub fn hitting_time_mc(cfg: &HittingMcConfig) -> Result<Vec<Option<f64>>> {
    if cfg.n_paths < 2 || !(cfg.horizon > 0.0) || !(cfg.dt0 > 0.0) || !(cfg.growth >= 0.0) {
        return Err(SpmeError::config(
            "hitting Monte Carlo needs N >= 2, horizon > 0, dt0 > 0, growth >= 0",
        ));
    }
    Ok((0..cfg.n_paths)
        .into_par_iter()
        .map(|i| hitting_time_streaming(cfg, derive_seed(cfg.master_seed, i as u64)))
        .collect())
}

/// Smallest `T` with empirical `P(T_hat <= T) >= q`, or `None` if fewer than
/// `q N` paths hit.
pub fn empirical_quantile(times: &[Option<f64>], q: f64) -> Option<f64> {
    let mut hits: Vec<f64> = times.iter().flatten().copied().collect();
    hits.sort_by(f64::total_cmp);
    let need = (q * times.len() as f64).ceil() as usize;
    if need == 0 {
        return Some(0.0);
    }
    hits.get(need - 1).copied()
}
