use serde::{Deserialize, Serialize};

use crate::barenblatt::BarenblattProfile;
use crate::error::{Result, SpmeError};

/// Uniform cell-centred grid on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(SpmeError::config(format!("interval ({a}, {b}) is empty")));
        }
        if n < 3 {
            return Err(SpmeError::config(format!("need at least 3 cells, got {n}")));
        }
        Ok(Self { a, b, n })
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    /// Centre of cell `j`.
    pub fn x(&self, j: usize) -> f64 {
        self.a + (j as f64 + 0.5) * self.h()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.a, self.b, self.n).map(|_| ())
    }
}

/// Density samples at cell centres at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub grid: Grid1D,
    pub time: f64,
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Grid1D, time: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(SpmeError::Shape(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.n
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(SpmeError::config(format!(
                "density must be non-negative, found {v}"
            )));
        }
        Ok(Self { grid, time, values })
    }

    pub fn constant(grid: Grid1D, time: f64, value: f64) -> Self {
        Self {
            grid,
            time,
            values: vec![value; grid.n],
        }
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Midpoint-rule mass `h * sum u_j`.
    pub fn mass(&self) -> f64 {
        self.grid.h() * self.values.iter().sum::<f64>()
    }

    /// `max_j (u_j - floor)`.
    pub fn max_deviation(&self, floor: f64) -> f64 {
        self.values
            .iter()
            .fold(0.0_f64, |acc, u| acc.max(u - floor))
    }

    pub fn plus_constant(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            time: self.time,
            values: self.values.iter().map(|u| u + c).collect(),
        }
    }

    /// Subtracts `floor` and clips at zero.
    pub fn minus_floor(&self, floor: f64) -> Self {
        Self {
            grid: self.grid,
            time: self.time,
            values: self.values.iter().map(|u| (u - floor).max(0.0)).collect(),
        }
    }

    pub fn l1_distance(&self, other: &DensityField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(SpmeError::Shape("fields live on different grids".into()));
        }
        Ok(self.grid.h()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

/// Built-in initial densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    /// `height * exp(1 - 1/(1 - s^2))` with `s = (x - center)/half_width`.
    Bump {
        center: f64,
        half_width: f64,
        height: f64,
    },
    /// Time-zero slice of a delayed Barenblatt solution.
    Barenblatt(BarenblattProfile),
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Bump {
                center,
                half_width,
                height,
            } => height * smooth_bump((x - center) / half_width),
            Profile::Barenblatt(p) => p.eval_density(x, 0.0),
        }
    }

    /// Closed support `[lo, hi]`, `None` for the zero profile.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Profile::Zero => None,
            Profile::Bump {
                center,
                half_width,
                height,
            } => (*height > 0.0).then(|| (center - half_width, center + half_width)),
            Profile::Barenblatt(p) => {
                let r = p.free_boundary(0.0);
                Some((p.center - r, p.center + r))
            }
        }
    }
}

/// `exp(1 - 1/(1 - s^2))` on `|s| < 1`, peak value 1 at `s = 0`.
pub fn smooth_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Samples `profile` at the cell centres, requiring a zero collar of at least
/// two cells at each end.
pub fn initial_density(profile: &Profile, grid: Grid1D) -> Result<DensityField> {
    grid.validate()?;
    if let Profile::Bump {
        half_width, height, ..
    } = profile
    {
        if !(*half_width > 0.0) || !(*height >= 0.0) {
            return Err(SpmeError::config(
                "bump needs positive half-width and non-negative height",
            ));
        }
    }
    if let Some((lo, hi)) = profile.support() {
        let collar = 2.0 * grid.h();
        if lo < grid.a + collar || hi > grid.b - collar {
            return Err(SpmeError::config(format!(
                "initial support [{lo}, {hi}] must stay {collar} inside ({}, {})",
                grid.a, grid.b
            )));
        }
    }
    let values = grid
        .centers()
        .into_iter()
        .map(|x| profile.eval(x))
        .collect();
    DensityField::new(grid, 0.0, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::adaptive_simpson;

    #[test]
    fn zero_profile_is_zero() {
        let g = Grid1D::new(-1.0, 1.0, 50).unwrap();
        let u = initial_density(&Profile::Zero, g).unwrap();
        assert!(u.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bump_vanishes_outside_half_width() {
        let g = Grid1D::new(0.0, 4.0, 400).unwrap();
        let p = Profile::Bump {
            center: 2.0,
            half_width: 1.0,
            height: 1.0,
        };
        let u = initial_density(&p, g).unwrap();
        for (j, v) in u.values.iter().enumerate() {
            if (g.x(j) - 2.0).abs() >= 1.0 {
                assert_eq!(*v, 0.0);
            } else {
                assert!(*v > 0.0);
            }
        }
    }

    #[test]
    fn bump_mass_matches_quadrature_oracle() {
        let g = Grid1D::new(-1.0, 1.0, 256).unwrap();
        let p = Profile::Bump {
            center: 0.1,
            half_width: 0.5,
            height: 0.7,
        };
        let u = initial_density(&p, g).unwrap();
        let exact = adaptive_simpson(&|x| p.eval(x), -0.4, 0.6, 1e-12);
        assert!((u.mass() - exact).abs() < 1e-6, "{} vs {exact}", u.mass());
    }

    #[test]
    fn support_touching_boundary_is_rejected() {
        let g = Grid1D::new(-1.0, 1.0, 100).unwrap();
        let p = Profile::Bump {
            center: 0.5,
            half_width: 0.49,
            height: 1.0,
        };
        assert!(matches!(initial_density(&p, g), Err(SpmeError::Config(_))));
    }

    #[test]
    fn grid_geometry() {
        let g = Grid1D::new(-2.0, 2.0, 400).unwrap();
        assert_eq!(g.h(), 0.01);
        assert!((g.x(0) + 1.995).abs() < 1e-15);
        assert!((g.x(399) - 1.995).abs() < 1e-12);
        assert!(Grid1D::new(1.0, 1.0, 10).is_err());
    }
}
