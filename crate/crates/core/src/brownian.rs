//! Brownian paths, their adapted mollifications and path statistics.
//!
//! Paths are sampled on a uniform grid `t_k = k * dt` from a ChaCha8 stream
//! seeded by a 64-bit token. A Monte Carlo run derives the token of path `i`
//! from the master seed with [`derive_seed`], so every path is reproducible in
//! isolation and independent of scheduling.
//!
//! The mollified path is the backward average
//! `B^eps_t = int_0^1 rho(r) B(t - eps r) dr` with a smooth bump `rho` supported
//! on `(0, 1)`; it only looks at the past window `[t - eps, t]`.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpmeError};

/// SplitMix64 finalizer; mixes `(master, index)` into an independent stream token.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(master ^ mix(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

/// Standard normal stream used for all path sampling.
pub fn normal_stream(seed: u64) -> impl FnMut() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move || StandardNormal.sample(&mut rng)
}

/// A Brownian trajectory sampled at `t_k = k * dt`, `k = 0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    dt: f64,
    values: Vec<f64>,
    seed: u64,
}

impl BrownianPath {
    /// Builds a path from explicit samples on a uniform grid. `values[0]` must be 0.
    pub fn from_values(dt: f64, values: Vec<f64>, seed: u64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SpmeError::config(format!(
                "path step must be positive, got {dt}"
            )));
        }
        if values.len() < 2 {
            return Err(SpmeError::config("a path needs at least two samples"));
        }
        if values[0] != 0.0 {
            return Err(SpmeError::config("a Brownian path starts at 0"));
        }
        Ok(Self { dt, values, seed })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    pub fn t_grid(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.time(k)).collect()
    }

    /// Piecewise-linear interpolant, extended by `B_0 = 0` for `t < 0` and held
    /// constant past the last sample.
    pub fn value_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let s = t / self.dt;
        let k = s.floor() as usize;
        let last = self.values.len() - 1;
        if k >= last {
            return self.values[last];
        }
        let w = s - k as f64;
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    /// Keeps every `stride`-th sample.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(SpmeError::config("subsample stride must be positive"));
        }
        let values: Vec<f64> = self.values.iter().step_by(stride).copied().collect();
        Self::from_values(self.dt * stride as f64, values, self.seed)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// SHA-256 over the binary record; used to prove common-noise coupling.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        write_path_binary(&mut buf, self, None).expect("writing to a Vec cannot fail");
        crate::io::sha256_hex(&buf)
    }
}

fn check_sampling(horizon: f64, dt_path: f64) -> Result<usize> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(SpmeError::config(format!(
            "path horizon must be positive, got {horizon}"
        )));
    }
    if !(dt_path > 0.0) || !dt_path.is_finite() {
        return Err(SpmeError::config(format!(
            "path step must be positive, got {dt_path}"
        )));
    }
    let steps = (horizon / dt_path - 1e-9).ceil();
    if horizon / dt_path < 2.0 - 1e-9 {
        return Err(SpmeError::config(format!(
            "horizon/dt_path = {} must be at least 2",
            horizon / dt_path
        )));
    }
    Ok(steps as usize)
}

/// Samples a standard Brownian path covering `[0, horizon]`.
pub fn sample_path(horizon: f64, dt_path: f64, seed: u64) -> Result<BrownianPath> {
    sample_path_with(horizon, dt_path, seed, normal_stream(seed))
}

/// Same as [`sample_path`] with an explicit source of standard normal draws.
pub fn sample_path_with(
    horizon: f64,
    dt_path: f64,
    seed: u64,
    mut normal: impl FnMut() -> f64,
) -> Result<BrownianPath> {
    let steps = check_sampling(horizon, dt_path)?;
    let scale = dt_path.sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut b = 0.0;
    values.push(b);
    for _ in 0..steps {
        b += scale * normal();
        values.push(b);
    }
    BrownianPath::from_values(dt_path, values, seed)
}

/// Unit mollifier `rho(r) = c exp(-1/(r(1-r)))` on `(0, 1)`, tabulated at
/// midpoints so that the discrete mass is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct Mollifier {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    derivative_weights: Vec<f64>,
    first_moment: f64,
}

impl Mollifier {
    pub const DEFAULT_NODES: usize = 256;
    pub const MIN_NODES: usize = 64;

    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < Self::MIN_NODES {
            return Err(SpmeError::config(format!(
                "mollifier needs at least {} nodes, got {nodes}",
                Self::MIN_NODES
            )));
        }
        let r: Vec<f64> = (0..nodes)
            .map(|i| (i as f64 + 0.5) / nodes as f64)
            .collect();
        let raw: Vec<f64> = r.iter().map(|&r| bump(r)).collect();
        let raw_prime: Vec<f64> = r.iter().map(|&r| bump_derivative(r)).collect();
        let mass: f64 = raw.iter().sum::<f64>() / nodes as f64;
        let scale = 1.0 / (mass * nodes as f64);
        let weights: Vec<f64> = raw.iter().map(|w| w * scale).collect();
        let derivative_weights: Vec<f64> = raw_prime.iter().map(|w| w * scale).collect();
        let first_moment = r.iter().zip(&weights).map(|(r, w)| r * w).sum();
        Ok(Self {
            nodes: r,
            weights,
            derivative_weights,
            first_moment,
        })
    }

    /// `m1 = int r rho(r) dr`.
    pub fn first_moment(&self) -> f64 {
        self.first_moment
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn average(&self, path: &BrownianPath, t: f64, epsilon: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * path.value_at(t - epsilon * r))
            .sum()
    }

    fn derivative(&self, path: &BrownianPath, t: f64, epsilon: f64) -> f64 {
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.derivative_weights)
            .map(|(r, w)| w * path.value_at(t - epsilon * r))
            .sum();
        s / epsilon
    }
}

impl Default for Mollifier {
    fn default() -> Self {
        Self::new(Self::DEFAULT_NODES).expect("default node count is valid")
    }
}

fn bump(r: f64) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        0.0
    } else {
        (-1.0 / (r * (1.0 - r))).exp()
    }
}

fn bump_derivative(r: f64) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        0.0
    } else {
        let q = r * (1.0 - r);
        bump(r) * (1.0 - 2.0 * r) / (q * q)
    }
}

/// `B^eps` on the path grid together with the data needed to evaluate it, and
/// its time derivative, at arbitrary times.
#[derive(Debug, Clone)]
pub struct MollifiedPath {
    path: Arc<BrownianPath>,
    epsilon: f64,
    kernel: Arc<Mollifier>,
    values: Vec<f64>,
}

impl MollifiedPath {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn path(&self) -> &BrownianPath {
        &self.path
    }

    pub fn shared_path(&self) -> Arc<BrownianPath> {
        Arc::clone(&self.path)
    }

    /// `B^eps` at the path sample times.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kernel_moment(&self) -> f64 {
        self.kernel.first_moment()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.kernel.average(&self.path, t, self.epsilon)
    }

    /// `dB^eps/dt`, evaluated as the convolution of `B` with `rho_eps'`.
    pub fn drift_at(&self, t: f64) -> f64 {
        self.kernel.derivative(&self.path, t, self.epsilon)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Mollifies `path` at scale `epsilon` with the default kernel.
pub fn mollify(path: &BrownianPath, epsilon: f64) -> Result<MollifiedPath> {
    mollify_shared(
        Arc::new(path.clone()),
        epsilon,
        Arc::new(Mollifier::default()),
    )
}

/// Mollifies a shared path; all scales of a common-noise experiment hold the
/// same `Arc`.
pub fn mollify_shared(
    path: Arc<BrownianPath>,
    epsilon: f64,
    kernel: Arc<Mollifier>,
) -> Result<MollifiedPath> {
    let required = 2.0 * path.dt();
    if !(epsilon > 0.0) || epsilon < required * (1.0 - 1e-12) {
        return Err(SpmeError::Resolution { epsilon, required });
    }
    let values = (0..path.len())
        .map(|k| kernel.average(&path, path.time(k), epsilon))
        .collect();
    Ok(MollifiedPath {
        path,
        epsilon,
        kernel,
        values,
    })
}

/// Hölder constant estimate over sample pairs at least one step apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoelderEstimate {
    pub alpha: f64,
    pub c_alpha: f64,
}

/// `max |B_t - B_s| / |t - s|^alpha` over all sample pairs.
///
/// Lags are processed in dyadic blocks; a sparse min/max table bounds each
/// block in O(1) and only blocks that could beat the running maximum are
/// scanned.
pub fn hoelder_constant(path: &BrownianPath, alpha: f64) -> Result<HoelderEstimate> {
    if !(alpha > 1.0 / 3.0 && alpha < 0.5) {
        return Err(SpmeError::Precondition(format!(
            "Hölder exponent must lie in (1/3, 1/2), got {alpha}"
        )));
    }
    let b = path.values();
    let n = b.len();
    let table = RangeTable::new(b);
    let dt = path.dt();
    let mut best = 0.0_f64;
    // seed the running maximum with single-step increments
    for w in b.windows(2) {
        best = best.max((w[1] - w[0]).abs() / dt.powf(alpha));
    }
    for i in 0..n - 1 {
        let mut lo = 1usize;
        while i + lo < n {
            let hi = (2 * lo).min(n - i); // block lags [lo, hi)
            let (mn, mx) = table.min_max(i + lo, i + hi - 1);
            let reach = (mx - b[i]).abs().max((b[i] - mn).abs());
            let bound = reach / (lo as f64 * dt).powf(alpha);
            if bound > best {
                for lag in lo..hi {
                    let r = (b[i + lag] - b[i]).abs() / (lag as f64 * dt).powf(alpha);
                    if r > best {
                        best = r;
                    }
                }
            }
            lo = hi;
        }
    }
    Ok(HoelderEstimate {
        alpha,
        c_alpha: best,
    })
}

struct RangeTable {
    mins: Vec<Vec<f64>>,
    maxs: Vec<Vec<f64>>,
}

impl RangeTable {
    fn new(values: &[f64]) -> Self {
        let mut mins = vec![values.to_vec()];
        let mut maxs = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let pm = mins.last().unwrap();
            let px = maxs.last().unwrap();
            let len = values.len() + 1 - 2 * width;
            mins.push((0..len).map(|i| pm[i].min(pm[i + width])).collect());
            maxs.push((0..len).map(|i| px[i].max(px[i + width])).collect());
            width *= 2;
        }
        Self { mins, maxs }
    }

    /// Inclusive range `[a, b]`.
    fn min_max(&self, a: usize, b: usize) -> (f64, f64) {
        let len = b - a + 1;
        let level = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let w = 1 << level;
        (
            self.mins[level][a].min(self.mins[level][b + 1 - w]),
            self.maxs[level][a].max(self.maxs[level][b + 1 - w]),
        )
    }
}

/// `max_k |a_k - b_k|`.
pub fn sup_abs_diff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SpmeError::Shape(format!(
            "sample counts differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs())))
}

/// Shift magnitude `sup_t |B_t - B^eps_t|` on the common sample grid.
pub fn sup_distance(path: &BrownianPath, mpath: &MollifiedPath) -> Result<f64> {
    if (path.dt() - mpath.path().dt()).abs() > 1e-15 * path.dt() {
        return Err(SpmeError::Shape(format!(
            "path grids differ: dt {} vs {}",
            path.dt(),
            mpath.path().dt()
        )));
    }
    sup_abs_diff(path.values(), mpath.values())
}

const PATH_MAGIC: &[u8; 8] = b"SPMEPATH";

/// Binary record: magic, seed (u64), dt, epsilon (NaN when absent), sample
/// count (u64), then `B` and optionally `B^eps`, all little-endian.
pub fn write_path_binary<W: Write>(
    mut w: W,
    path: &BrownianPath,
    mollified: Option<&MollifiedPath>,
) -> Result<()> {
    w.write_all(PATH_MAGIC)?;
    w.write_all(&path.seed.to_le_bytes())?;
    w.write_all(&path.dt.to_le_bytes())?;
    let eps = mollified.map_or(f64::NAN, |m| m.epsilon);
    w.write_all(&eps.to_le_bytes())?;
    w.write_all(&(path.len() as u64).to_le_bytes())?;
    for v in &path.values {
        w.write_all(&v.to_le_bytes())?;
    }
    if let Some(m) = mollified {
        for v in &m.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a record written by [`write_path_binary`]; returns the path and the
/// stored mollification scale, if any. `B^eps` is recomputed on demand.
pub fn read_path_binary<R: Read>(mut r: R) -> Result<(BrownianPath, Option<f64>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != PATH_MAGIC {
        return Err(SpmeError::config("not a path record"));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let seed = u64::from_le_bytes(word);
    r.read_exact(&mut word)?;
    let dt = f64::from_le_bytes(word);
    r.read_exact(&mut word)?;
    let eps = f64::from_le_bytes(word);
    r.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut word)?;
        values.push(f64::from_le_bytes(word));
    }
    let path = BrownianPath::from_values(dt, values, seed)?;
    Ok((path, (!eps.is_nan()).then_some(eps)))
}

/// CSV with columns `t,B,B_eps`.
pub fn write_path_csv<W: Write>(w: W, mpath: &MollifiedPath) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "B", "B_eps"])?;
    let path = mpath.path();
    for (k, (b, be)) in path.values().iter().zip(mpath.values()).enumerate() {
        out.write_record([
            crate::io::fmt_f64(path.time(k)),
            crate::io::fmt_f64(*b),
            crate::io::fmt_f64(*be),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_path(dt: f64, horizon: f64) -> BrownianPath {
        let n = (horizon / dt).round() as usize;
        let values = (0..=n).map(|k| k as f64 * dt).collect();
        BrownianPath::from_values(dt, values, 0).unwrap()
    }

    #[test]
    fn zero_generator_gives_zero_path() {
        let p = sample_path_with(1.0, 0.5, 9, || 0.0).unwrap();
        assert_eq!(p.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_sampling() {
        assert!(matches!(
            sample_path(0.0, 0.1, 1),
            Err(SpmeError::Config(_))
        ));
        assert!(matches!(
            sample_path(1.0, -0.1, 1),
            Err(SpmeError::Config(_))
        ));
        assert!(sample_path(1.0, 0.75, 1).is_err());
    }

    #[test]
    fn increment_variance_within_chi_square_band() {
        let dt = 1.0 / 1024.0;
        let p = sample_path(1.0, dt, 42).unwrap();
        assert_eq!(p.len(), 1025);
        let incs: Vec<f64> = p.values().windows(2).map(|w| w[1] - w[0]).collect();
        let var = incs.iter().map(|x| x * x).sum::<f64>() / incs.len() as f64;
        assert!(var > 0.8 * dt && var < 1.2 * dt, "variance {var}");
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = sample_path(2.0, 0.01, 7).unwrap();
        let b = sample_path(2.0, 0.01, 7).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        write_path_binary(&mut ba, &a, None).unwrap();
        write_path_binary(&mut bb, &b, None).unwrap();
        assert_eq!(ba, bb);
        assert_ne!(a, sample_path(2.0, 0.01, 8).unwrap());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|i| derive_seed(5, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn mollify_zero_path() {
        let p = BrownianPath::from_values(0.01, vec![0.0; 101], 0).unwrap();
        let m = mollify(&p, 0.05).unwrap();
        assert!(m.values().iter().all(|v| *v == 0.0));
        assert_eq!(m.drift_at(0.5), 0.0);
    }

    #[test]
    fn mollify_linear_path_shifts_by_first_moment() {
        // independent moment: Simpson's rule on the raw bump with 20000 panels
        let n = 20_000;
        let h = 1.0 / n as f64;
        let simpson = |f: &dyn Fn(f64) -> f64| {
            let mut s = f(0.0) + f(1.0);
            for i in 1..n {
                let c = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += c * f(i as f64 * h);
            }
            s * h / 3.0
        };
        let mass = simpson(&|r| bump(r));
        let m1 = simpson(&|r| r * bump(r)) / mass;
        let p = linear_path(1e-3, 2.0);
        let eps = 0.1;
        let m = mollify(&p, eps).unwrap();
        assert!(
            (m.kernel_moment() - m1).abs() < 1e-10,
            "{} vs {m1}",
            m.kernel_moment()
        );
        for &t in &[0.1, 0.37, 1.0, 1.999] {
            assert!((m.value_at(t) - (t - eps * m1)).abs() < 1e-8);
            assert!((m.drift_at(t) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn mollify_requires_resolution() {
        let p = sample_path(1.0, 0.01, 1).unwrap();
        assert!(matches!(
            mollify(&p, 0.015),
            Err(SpmeError::Resolution { .. })
        ));
        assert!(mollify(&p, 0.02).is_ok());
    }

    #[test]
    fn mollified_path_is_adapted() {
        let p = sample_path(1.0, 1e-3, 3).unwrap();
        let m = mollify(&p, 0.05).unwrap();
        let k = 400;
        let t = p.time(k);
        let mut values = p.values().to_vec();
        for v in values.iter_mut().skip(k + 1) {
            *v += 10.0;
        }
        let q = BrownianPath::from_values(p.dt(), values, p.seed()).unwrap();
        let mq = mollify(&q, 0.05).unwrap();
        assert_eq!(m.value_at(t), mq.value_at(t));
        assert_eq!(m.drift_at(t), mq.drift_at(t));
        assert_ne!(m.value_at(t + 0.01), mq.value_at(t + 0.01));
    }

    #[test]
    fn mollified_sup_bounded_by_path_sup() {
        for seed in 0..20 {
            let p = sample_path(1.0, 1e-3, seed).unwrap();
            let m = mollify(&p, 0.03).unwrap();
            assert!(m.sup_abs() <= p.sup_abs() + 1e-12);
        }
    }

    #[test]
    fn shift_magnitude_decreases_with_epsilon() {
        let p = sample_path(1.0, 1.0 / 4096.0, 11).unwrap();
        let d: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&e| sup_distance(&p, &mollify(&p, e).unwrap()).unwrap())
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }

    #[test]
    fn shift_magnitude_below_hoelder_bound() {
        let p = sample_path(1.0, 1.0 / 4096.0, 12).unwrap();
        let c = hoelder_constant(&p, 0.4).unwrap().c_alpha;
        for eps in [0.1, 0.05, 0.025, 0.01] {
            let d = sup_distance(&p, &mollify(&p, eps).unwrap()).unwrap();
            assert!(d <= c * (2.0 * eps).powf(0.4) + 1e-8, "eps {eps}: {d}");
        }
    }

    #[test]
    fn hoelder_trivial_cases() {
        let z = BrownianPath::from_values(0.1, vec![0.0; 11], 0).unwrap();
        assert_eq!(hoelder_constant(&z, 0.4).unwrap().c_alpha, 0.0);
        let one = BrownianPath::from_values(1.0, vec![0.0, 1.0], 0).unwrap();
        assert_eq!(hoelder_constant(&one, 0.4).unwrap().c_alpha, 1.0);
        assert!(hoelder_constant(&one, 0.3).is_err());
        assert!(hoelder_constant(&one, 0.5).is_err());
    }

    fn brute_force_hoelder(p: &BrownianPath, alpha: f64) -> f64 {
        let b = p.values();
        let mut best = 0.0_f64;
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                let r = (b[j] - b[i]).abs() / ((j - i) as f64 * p.dt()).powf(alpha);
                best = best.max(r);
            }
        }
        best
    }

    #[test]
    fn hoelder_matches_all_pairs_oracle() {
        for seed in 0..5 {
            let p = sample_path(1.0, 1.0 / 1500.0, seed).unwrap();
            let fast = hoelder_constant(&p, 0.4).unwrap().c_alpha;
            assert_eq!(fast, brute_force_hoelder(&p, 0.4));
        }
    }

    #[test]
    fn hoelder_does_not_grow_on_subgrid() {
        let p = sample_path(1.0, 1.0 / 2048.0, 21).unwrap();
        let full = hoelder_constant(&p, 0.45).unwrap().c_alpha;
        for stride in [2, 3, 8] {
            let sub = hoelder_constant(&p.subsample(stride).unwrap(), 0.45)
                .unwrap()
                .c_alpha;
            assert!(sub <= full);
        }
    }

    #[test]
    fn sup_distance_cases() {
        assert_eq!(sup_abs_diff(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(
            sup_abs_diff(&[0.0, 1.0, 0.0], &[0.0, 0.5, 0.0]).unwrap(),
            0.5
        );
        assert!(matches!(
            sup_abs_diff(&[0.0], &[0.0, 1.0]),
            Err(SpmeError::Shape(_))
        ));
        let p = sample_path(1.0, 0.01, 1).unwrap();
        let q = sample_path(1.0, 0.005, 1).unwrap();
        assert!(sup_distance(&p, &mollify(&q, 0.02).unwrap()).is_err());
    }

    #[test]
    fn binary_record_roundtrip() {
        let p = sample_path(1.0, 0.01, 77).unwrap();
        let m = mollify(&p, 0.05).unwrap();
        let mut buf = Vec::new();
        write_path_binary(&mut buf, &p, Some(&m)).unwrap();
        assert_eq!(buf.len(), 40 + 16 * p.len());
        let (q, eps) = read_path_binary(buf.as_slice()).unwrap();
        assert_eq!(q, p);
        assert_eq!(eps, Some(0.05));
    }

    #[test]
    fn csv_has_expected_columns() {
        let p = sample_path(0.1, 0.01, 1).unwrap();
        let m = mollify(&p, 0.02).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,B,B_eps\n"));
        assert_eq!(text.lines().count(), p.len() + 1);
    }
}
