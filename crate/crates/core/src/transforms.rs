//! Frame changes and variable changes applied to solver output: trivial
//! extension to an ambient grid, the shift `x -> x + delta`, the flow
//! transformation `v(x, t) = u(x - nu B_t, t)`, the pressure variable
//! `p = m/(m-1) u^(m-1)`, and the discrete upper envelope over an epsilon
//! family.

use serde::{Deserialize, Serialize};

use crate::brownian::{BrownianPath, MollifiedPath};
use crate::error::{Result, SpmeError};
use crate::solver::{DensityField, Grid1D};

/// Anything sampled at cell centres of a uniform grid at one time.
pub trait FieldView {
    fn grid(&self) -> Grid1D;
    fn time(&self) -> f64;
    fn values(&self) -> &[f64];
}

impl FieldView for DensityField {
    fn grid(&self) -> Grid1D {
        self.grid
    }
    fn time(&self) -> f64 {
        self.time
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Field on an ambient grid containing the solver interval plus a margin on
/// both sides, equal to `fill_value` outside the data it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedField {
    pub grid: Grid1D,
    pub time: f64,
    pub values: Vec<f64>,
    pub fill_value: f64,
    /// Largest admissible |shift|.
    pub margin: f64,
}

impl FieldView for ExtendedField {
    fn grid(&self) -> Grid1D {
        self.grid
    }
    fn time(&self) -> f64 {
        self.time
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

impl ExtendedField {
    /// Embeds `field` into an ambient grid wider by at least `margin` on each
    /// side; cell centres stay aligned with the original ones.
    pub fn extend(field: &DensityField, margin: f64, fill_value: f64) -> Result<Self> {
        if !(margin >= 0.0) || !margin.is_finite() {
            return Err(SpmeError::config(format!(
                "margin must be non-negative, got {margin}"
            )));
        }
        let g = field.grid;
        let h = g.h();
        let pad = (margin / h - 1e-9).ceil().max(0.0) as usize;
        let grid = Grid1D {
            a: g.a - pad as f64 * h,
            b: g.b + pad as f64 * h,
            n: g.n + 2 * pad,
        };
        let mut values = vec![fill_value; grid.n];
        values[pad..pad + g.n].copy_from_slice(&field.values);
        Ok(Self {
            grid,
            time: field.time,
            values,
            fill_value,
            margin: pad as f64 * h,
        })
    }

    pub fn mass(&self) -> f64 {
        self.grid.h() * self.values.iter().sum::<f64>()
    }

    /// Linear interpolant, `fill_value` outside the sampled range.
    pub fn value_at(&self, x: f64) -> f64 {
        let h = self.grid.h();
        let s = (x - self.grid.x(0)) / h;
        let i = s.floor();
        let w = s - i;
        let get = |k: f64| -> f64 {
            if k < 0.0 || k >= self.values.len() as f64 {
                self.fill_value
            } else {
                self.values[k as usize]
            }
        };
        if w == 0.0 {
            return get(i);
        }
        (1.0 - w) * get(i) + w * get(i + 1.0)
    }
}

/// `v(x) = u(x + delta)` by linear interpolation.
pub fn shift_field(field: &ExtendedField, delta: f64) -> Result<ExtendedField> {
    if delta.abs() > field.margin * (1.0 + 1e-12) + 1e-15 {
        return Err(SpmeError::Range {
            what: format!("shift by {delta}"),
            required: delta.abs(),
            available: field.margin,
        });
    }
    let h = field.grid.h();
    let cells = delta / h;
    let values = if (cells - cells.round()).abs() < 1e-9 {
        // grid-aligned: exact index shift
        let k = cells.round() as i64;
        (0..field.values.len() as i64)
            .map(|j| {
                let src = j + k;
                if src < 0 || src >= field.values.len() as i64 {
                    field.fill_value
                } else {
                    field.values[src as usize]
                }
            })
            .collect()
    } else {
        (0..field.grid.n)
            .map(|j| field.value_at(field.grid.x(j) + delta))
            .collect()
    };
    Ok(ExtendedField {
        values,
        ..field.clone()
    })
}

/// `m/(m-1) u^(m-1)`.
pub fn pressure_of(u: f64, m: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    m / (m - 1.0) * u.powf(m - 1.0)
}

/// `((m-1) p / m)^(1/(m-1))`, inverse of [`pressure_of`].
pub fn density_of(p: f64, m: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    ((m - 1.0) * p / m).powf(1.0 / (m - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureField {
    pub grid: Grid1D,
    pub time: f64,
    pub m: f64,
    pub values: Vec<f64>,
}

impl FieldView for PressureField {
    fn grid(&self) -> Grid1D {
        self.grid
    }
    fn time(&self) -> f64 {
        self.time
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn to_pressure<F: FieldView + ?Sized>(field: &F, m: f64) -> Result<PressureField> {
    if !(m > 1.0) {
        return Err(SpmeError::config(format!(
            "pressure transform needs m > 1, got {m}"
        )));
    }
    if let Some(u) = field.values().iter().find(|u| !(**u >= 0.0)) {
        return Err(SpmeError::config(format!(
            "density must be non-negative, found {u}"
        )));
    }
    Ok(PressureField {
        grid: field.grid(),
        time: field.time(),
        m,
        values: field.values().iter().map(|u| pressure_of(*u, m)).collect(),
    })
}

/// Source of path values for frame changes.
pub trait PathValues {
    fn value_at(&self, t: f64) -> f64;
    fn sup_abs(&self) -> f64;
}

impl PathValues for BrownianPath {
    fn value_at(&self, t: f64) -> f64 {
        BrownianPath::value_at(self, t)
    }
    fn sup_abs(&self) -> f64 {
        BrownianPath::sup_abs(self)
    }
}

impl PathValues for MollifiedPath {
    fn value_at(&self, t: f64) -> f64 {
        MollifiedPath::value_at(self, t)
    }
    fn sup_abs(&self) -> f64 {
        // the interpolant between samples can exceed the sampled maximum slightly
        MollifiedPath::sup_abs(self) + self.path().dt().sqrt()
    }
}

/// Zero path, for deterministic runs.
pub struct ZeroPath;

impl PathValues for ZeroPath {
    fn value_at(&self, _t: f64) -> f64 {
        0.0
    }
    fn sup_abs(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    /// `v(x, t) = u(x - nu B_t, t)`.
    ToMoving,
    /// `u(x, t) = v(x + nu B_t, t)`.
    ToLab,
}

/// Ambient margin needed to follow `path` over its horizon: `nu sup|B| + 4h`.
pub fn ambient_margin(path: &dyn PathValues, nu: f64, h: f64) -> f64 {
    nu * path.sup_abs() + 4.0 * h
}

/// Translates every field by `-+ nu B_t` at its own time.
pub fn flow_frame(
    fields: &[ExtendedField],
    path: &dyn PathValues,
    nu: f64,
    mode: FrameMode,
) -> Result<Vec<ExtendedField>> {
    fields
        .iter()
        .map(|f| {
            let b = nu * path.value_at(f.time);
            let delta = match mode {
                FrameMode::ToMoving => -b,
                FrameMode::ToLab => b,
            };
            if delta.abs() > f.margin * (1.0 + 1e-12) + 1e-15 {
                return Err(SpmeError::Range {
                    what: format!("ambient grid too small for the flow at t = {}", f.time),
                    required: delta.abs(),
                    available: f.margin,
                });
            }
            shift_field(f, delta)
        })
        .collect()
}

/// Extends every snapshot by the ambient margin of `path` and moves it to the
/// frame that follows the flow.
pub fn moving_frame(
    snapshots: &[DensityField],
    path: &dyn PathValues,
    nu: f64,
    fill_value: f64,
) -> Result<Vec<ExtendedField>> {
    let Some(first) = snapshots.first() else {
        return Ok(Vec::new());
    };
    let margin = ambient_margin(path, nu, first.grid.h());
    let extended = snapshots
        .iter()
        .map(|s| ExtendedField::extend(s, margin, fill_value))
        .collect::<Result<Vec<_>>>()?;
    flow_frame(&extended, path, nu, FrameMode::ToMoving)
}

/// Discrete upper semi-relaxed envelope: at every `(x_j, t_i)` the maximum of
/// all family members over cells with `|y - x_j| <= space_radius` and
/// snapshot times `s` with `t_i - time_radius^2 <= s <= t_i`.
///
/// `family[e][i]` is the pressure of member `e` at snapshot `i`; all members
/// must share the grid and snapshot times.
pub fn upper_envelope(
    family: &[Vec<PressureField>],
    space_radius: f64,
    time_radius: f64,
) -> Result<Vec<PressureField>> {
    let Some(head) = family.first() else {
        return Err(SpmeError::config("upper envelope of an empty family"));
    };
    if !(space_radius >= 0.0) || !(time_radius >= 0.0) {
        return Err(SpmeError::config("envelope radii must be non-negative"));
    }
    for member in family {
        if member.len() != head.len()
            || member
                .iter()
                .zip(head)
                .any(|(a, b)| a.grid != b.grid || (a.time - b.time).abs() > 1e-12)
        {
            return Err(SpmeError::Shape(
                "family members must share grid and snapshot times".into(),
            ));
        }
    }
    // pointwise maximum over the family first; max is associative
    let pointwise: Vec<Vec<f64>> = (0..head.len())
        .map(|i| {
            let mut v = head[i].values.clone();
            for member in &family[1..] {
                for (acc, x) in v.iter_mut().zip(&member[i].values) {
                    *acc = acc.max(*x);
                }
            }
            v
        })
        .collect();
    let h = head.first().map_or(1.0, |p| p.grid.h());
    let reach = (space_radius / h * (1.0 + 1e-12)).floor() as usize;
    let window = time_radius * time_radius;
    let mut out = Vec::with_capacity(head.len());
    for (i, frame) in head.iter().enumerate() {
        let n = frame.values.len();
        let mut vals = vec![f64::NEG_INFINITY; n];
        for (k, past) in head.iter().enumerate().take(i + 1) {
            if past.time < frame.time - window * (1.0 + 1e-12) - 1e-15 {
                continue;
            }
            let src = &pointwise[k];
            for (j, v) in vals.iter_mut().enumerate() {
                let lo = j.saturating_sub(reach);
                let hi = (j + reach).min(n - 1);
                for x in &src[lo..=hi] {
                    *v = v.max(*x);
                }
            }
        }
        out.push(PressureField {
            grid: frame.grid,
            time: frame.time,
            m: frame.m,
            values: vals,
        });
    }
    Ok(out)
}

/// Residual norms of `p_t - ((m-1) p p_xx + |p_x|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub max: f64,
    /// Space-time `L1` norm over the evaluated cells.
    pub l1: f64,
    pub cells: usize,
}

/// `F(r, q, X) = (m-1) r X + q^2`.
pub fn porous_medium_functional(m: f64, r: f64, q: f64, xx: f64) -> f64 {
    (m - 1.0) * r * xx + q * q
}

/// Discrete pressure-equation residual: forward difference in time, central
/// differences in space, evaluated at time levels `0..L-1` on cells lying at
/// least `3h` inside `domains[i]` (the interval where level `i` is valid).
pub fn pressure_residual(
    fields: &[PressureField],
    domains: &[(f64, f64)],
    m: f64,
) -> Result<ResidualNorms> {
    if fields.len() < 3 {
        return Err(SpmeError::Shape(format!(
            "pressure residual needs at least 3 time levels, got {}",
            fields.len()
        )));
    }
    if domains.len() != fields.len() {
        return Err(SpmeError::Shape(
            "one domain per time level required".into(),
        ));
    }
    let mut max = 0.0_f64;
    let mut l1 = 0.0;
    let mut cells = 0;
    for i in 0..fields.len() - 1 {
        let (now, later) = (&fields[i], &fields[i + 1]);
        if now.grid != later.grid {
            return Err(SpmeError::Shape("time levels use different grids".into()));
        }
        let dt = later.time - now.time;
        if !(dt > 0.0) {
            return Err(SpmeError::Shape("time levels must increase".into()));
        }
        let h = now.grid.h();
        let (lo, hi) = domains[i];
        let (lo2, hi2) = domains[i + 1];
        let (lo, hi) = (lo.max(lo2) + 3.0 * h, hi.min(hi2) - 3.0 * h);
        let p = &now.values;
        for j in 1..p.len() - 1 {
            let x = now.grid.x(j);
            if x < lo || x > hi {
                continue;
            }
            let pt = (later.values[j] - p[j]) / dt;
            let px = (p[j + 1] - p[j - 1]) / (2.0 * h);
            let pxx = (p[j + 1] - 2.0 * p[j] + p[j - 1]) / (h * h);
            let r = pt - porous_medium_functional(m, p[j], px, pxx);
            max = max.max(r.abs());
            l1 += dt * h * r.abs();
            cells += 1;
        }
    }
    Ok(ResidualNorms { max, l1, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bump_field(grid: Grid1D, center: f64, width: f64) -> DensityField {
        let values = grid
            .centers()
            .into_iter()
            .map(|x| crate::solver::smooth_bump((x - center) / width))
            .collect();
        DensityField::new(grid, 0.0, values).unwrap()
    }

    #[test]
    fn zero_shift_is_identity() {
        let g = Grid1D::new(-1.0, 1.0, 100).unwrap();
        let e = ExtendedField::extend(&bump_field(g, 0.0, 0.5), 0.3, 0.0).unwrap();
        assert_eq!(shift_field(&e, 0.0).unwrap(), e);
    }

    #[test]
    fn one_cell_shift_is_index_shift() {
        let g = Grid1D::new(-1.0, 1.0, 100).unwrap();
        let e = ExtendedField::extend(&bump_field(g, 0.0, 0.5), 0.3, 0.0).unwrap();
        let s = shift_field(&e, g.h()).unwrap();
        for j in 0..e.values.len() - 1 {
            assert_eq!(s.values[j], e.values[j + 1]);
        }
    }

    #[test]
    fn shift_preserves_mass() {
        let g = Grid1D::new(-1.0, 1.0, 200).unwrap();
        let e = ExtendedField::extend(&bump_field(g, 0.1, 0.4), 0.5, 0.0).unwrap();
        let trapezoid = |v: &[f64]| {
            let h = g.h();
            h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
        };
        for delta in [0.0123, -0.2777, 0.4] {
            let s = shift_field(&e, delta).unwrap();
            assert!((trapezoid(&s.values) - trapezoid(&e.values)).abs() < 1e-10);
        }
    }

    #[test]
    fn shift_beyond_margin_is_rejected() {
        let g = Grid1D::new(-1.0, 1.0, 100).unwrap();
        let e = ExtendedField::extend(&bump_field(g, 0.0, 0.5), 0.1, 0.0).unwrap();
        assert!(matches!(shift_field(&e, 0.2), Err(SpmeError::Range { .. })));
    }

    #[test]
    fn extension_fills_outside() {
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        let f = DensityField::constant(g, 0.0, 1.0);
        let e = ExtendedField::extend(&f, 0.25, 0.5).unwrap();
        assert_eq!(e.grid.n, 16);
        assert!((e.margin - 0.3).abs() < 1e-12);
        assert_eq!(&e.values[..3], &[0.5; 3]);
        assert_eq!(&e.values[3..13], &[1.0; 10]);
    }

    #[test]
    fn pressure_values() {
        assert_eq!(pressure_of(0.0, 2.0), 0.0);
        assert_eq!(pressure_of(1.0, 2.0), 2.0);
        assert!((pressure_of(0.5, 3.0) - 0.375).abs() < 1e-15);
        let g = Grid1D::new(0.0, 1.0, 4).unwrap();
        let f = DensityField::constant(g, 0.0, 1.0);
        assert!(to_pressure(&f, 1.0).is_err());
        assert_eq!(to_pressure(&f, 2.0).unwrap().values, vec![2.0; 4]);
    }

    proptest! {
        #[test]
        fn pressure_inverse_roundtrip(u in 0.0f64..10.0, m in 1.1f64..5.0) {
            let back = density_of(pressure_of(u, m), m);
            prop_assert!((back - u).abs() <= 1e-12 * (1.0 + u));
        }

        #[test]
        fn pressure_is_monotone(a in 0.0f64..5.0, b in 0.0f64..5.0, m in 1.1f64..4.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(pressure_of(lo, m) <= pressure_of(hi, m));
        }

        #[test]
        fn envelope_grows_with_radius(r1 in 0.0f64..0.3, extra in 0.0f64..0.3, tr in 0.0f64..0.5) {
            let g = Grid1D::new(-1.0, 1.0, 40).unwrap();
            let frames: Vec<PressureField> = (0..5).map(|i| PressureField {
                grid: g,
                time: 0.1 * i as f64,
                m: 2.0,
                values: g.centers().iter().map(|x| ((3.0 * x + i as f64).sin()).abs()).collect(),
            }).collect();
            let small = upper_envelope(&[frames.clone()], r1, tr).unwrap();
            let big = upper_envelope(&[frames], r1 + extra, tr + extra).unwrap();
            for (s, b) in small.iter().zip(&big) {
                for (x, y) in s.values.iter().zip(&b.values) {
                    prop_assert!(y >= x);
                }
            }
        }
    }

    #[test]
    fn shift_roundtrip_error_is_second_order() {
        let err = |n: usize| {
            let g = Grid1D::new(-1.0, 1.0, n).unwrap();
            let e = ExtendedField::extend(&bump_field(g, 0.0, 0.6), 0.5, 0.0).unwrap();
            let there = shift_field(&e, 0.1234).unwrap();
            let back = shift_field(&there, -0.1234).unwrap();
            sup(&back.values, &e.values)
        };
        let (e1, e2) = (err(200), err(400));
        assert!(e1 < 5e-3, "{e1}");
        assert!(e1 / e2 > 3.0, "{e1} {e2}");
    }

    fn sup(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn flow_frame_with_zero_path_is_identity() {
        let g = Grid1D::new(-1.0, 1.0, 50).unwrap();
        let snaps: Vec<DensityField> = (0..3)
            .map(|i| DensityField {
                time: i as f64 * 0.1,
                ..bump_field(g, 0.0, 0.5)
            })
            .collect();
        let moved = moving_frame(&snaps, &ZeroPath, 1.0, 0.0).unwrap();
        for (m, s) in moved.iter().zip(&snaps) {
            assert_eq!(&m.values[4..54], s.values.as_slice());
        }
    }

    #[test]
    fn flow_frame_roundtrip_on_smooth_profile() {
        let path = BrownianPath::from_values(0.1, vec![0.0, 0.0123, -0.05, 0.2], 0).unwrap();
        let err = |n: usize| {
            let g = Grid1D::new(-1.0, 1.0, n).unwrap();
            let snaps: Vec<DensityField> = (0..4)
                .map(|i| DensityField {
                    time: i as f64 * 0.1,
                    ..bump_field(g, 0.0, 0.6)
                })
                .collect();
            let moved = moving_frame(&snaps, &path, 1.0, 0.0).unwrap();
            let back = flow_frame(&moved, &path, 1.0, FrameMode::ToLab).unwrap();
            let pad = (back[0].grid.n - n) / 2;
            back.iter()
                .zip(&snaps)
                .map(|(b, s)| sup(&b.values[pad..pad + n], &s.values))
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(100), err(200));
        let h = 0.02;
        assert!(e1 <= 20.0 * h * h, "{e1}");
        assert!(e1 / e2 > 3.0, "{e1} {e2}");
    }

    #[test]
    fn flow_frame_reports_required_margin() {
        let g = Grid1D::new(-1.0, 1.0, 50).unwrap();
        let e = ExtendedField::extend(&bump_field(g, 0.0, 0.5), 0.1, 0.0).unwrap();
        let path = BrownianPath::from_values(1.0, vec![0.0, 0.5], 0).unwrap();
        let e = ExtendedField { time: 1.0, ..e };
        match flow_frame(&[e], &path, 1.0, FrameMode::ToMoving) {
            Err(SpmeError::Range { required, .. }) => assert!((required - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn envelope_trivial_cases() {
        let g = Grid1D::new(0.0, 1.0, 8).unwrap();
        let f = |c: f64, t: f64| PressureField {
            grid: g,
            time: t,
            m: 2.0,
            values: vec![c; 8],
        };
        let single = vec![f(1.0, 0.0), f(2.0, 0.1)];
        assert_eq!(upper_envelope(&[single.clone()], 0.0, 0.0).unwrap(), single);
        let fam = vec![vec![f(1.0, 0.0)], vec![f(3.0, 0.0)], vec![f(2.0, 0.0)]];
        assert_eq!(
            upper_envelope(&fam, 0.0, 0.0).unwrap()[0].values,
            vec![3.0; 8]
        );
        assert!(upper_envelope(&[], 0.0, 0.0).is_err());
    }

    #[test]
    fn envelope_dominates_members() {
        let g = Grid1D::new(0.0, 1.0, 30).unwrap();
        let fam: Vec<Vec<PressureField>> = (0..3)
            .map(|e| {
                (0..4)
                    .map(|i| PressureField {
                        grid: g,
                        time: 0.05 * i as f64,
                        m: 2.0,
                        values: g
                            .centers()
                            .iter()
                            .map(|x| (x * (e + 1) as f64 + i as f64).cos().abs())
                            .collect(),
                    })
                    .collect()
            })
            .collect();
        let env = upper_envelope(&fam, 2.0 * g.h(), 0.3).unwrap();
        for member in &fam {
            for (p, e) in member.iter().zip(&env) {
                assert!(p.values.iter().zip(&e.values).all(|(a, b)| b >= a));
            }
        }
    }

    #[test]
    fn residual_of_trivial_fields() {
        let g = Grid1D::new(0.0, 1.0, 50).unwrap();
        let constant: Vec<PressureField> = (0..3)
            .map(|i| PressureField {
                grid: g,
                time: i as f64,
                m: 2.0,
                values: vec![0.7; 50],
            })
            .collect();
        let r = pressure_residual(&constant, &[(0.0, 1.0); 3], 2.0).unwrap();
        assert_eq!(r.max, 0.0);
        assert!(r.cells > 0);
        let linear: Vec<PressureField> = (0..3)
            .map(|i| PressureField {
                grid: g,
                time: i as f64,
                m: 2.0,
                values: g.centers(),
            })
            .collect();
        let r = pressure_residual(&linear, &[(0.0, 1.0); 3], 2.0).unwrap();
        assert!((r.max - 1.0).abs() < 1e-9);
        assert!(pressure_residual(&linear[..2], &[(0.0, 1.0); 2], 2.0).is_err());
    }
}
