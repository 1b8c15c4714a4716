//! Uniform 2-D grid arithmetic shared by the continuum model and the
//! analysis code.
//!
//! Fields are stored row-major with `x` varying fastest: the value of cell
//! `(i, j)` lives at `j * nx + i`. Cell `(i, j)` is centred at
//! `((i + 0.5) dx, (j + 0.5) dy)`, so the domain is `[0, nx dx] x [0, ny dy]`.

mod convolve;
mod kernel;

pub use convolve::{convolve, convolve_direct, Convolver, PreparedKernel};
pub use kernel::{build_firing_kernel, Kernel, KernelKind, FIRING_TRUNCATION};

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Cell counts and spacing of a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::param("grid", format!("need at least 3x3 cells, got {nx}x{ny}")));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::param("grid", format!("cell size must be positive, got {dx}x{dy}")));
        }
        Ok(Self { nx, ny, dx, dy })
    }

    /// Square grid of `n x n` cells covering `[0, length]^2`.
    pub fn square(n: usize, length: f64) -> Result<Self> {
        Self::new(n, n, length / n as f64, length / n as f64)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.dy
    }

    /// Cell containing the point `(x, y)`, clamped into the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x / self.dx).floor().max(0.0) as usize).min(self.nx - 1);
        let j = ((y / self.dy).floor().max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "{}x{} @ ({}, {}) vs {}x{} @ ({}, {})",
                self.nx, self.ny, self.dx, self.dy, other.nx, other.ny, other.dx, other.dy
            )))
        }
    }
}

/// A density on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Geometry(format!(
                "expected {} values for a {}x{} grid, got {}",
                grid.len(),
                grid.nx,
                grid.ny,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("field", format!("non-finite value at index {k}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at every cell centre.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = value;
    }

    pub fn total_mass(&self) -> f64 {
        total_mass(self)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// `self + a * other`, checked for geometry.
    pub fn axpy(&self, a: f64, other: &ScalarField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        })
    }

    /// Reflection through the domain centre: `(i, j) -> (nx-1-i, ny-1-j)`.
    pub fn point_reflect(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Mirror across the vertical centre line: `(i, j) -> (nx-1-i, j)`.
    pub fn reflect_x(&self) -> Self {
        let g = self.grid;
        let mut out = self.clone();
        for j in 0..g.ny {
            for i in 0..g.nx {
                out.values[g.index(i, j)] = self.values[g.index(g.nx - 1 - i, j)];
            }
        }
        out
    }

    /// Swap the axes, `(i, j) -> (j, i)`. Requires a square grid.
    pub fn transpose(&self) -> Self {
        let g = self.grid;
        assert_eq!(g.nx, g.ny, "transpose needs a square grid");
        let mut out = self.clone();
        for j in 0..g.ny {
            for i in 0..g.nx {
                out.values[g.index(i, j)] = self.values[g.index(j, i)];
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;

    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.axpy(1.0, rhs).expect("adding fields on different grids")
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;

    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.axpy(-1.0, rhs).expect("subtracting fields on different grids")
    }
}

impl Mul<&ScalarField> for f64 {
    type Output = ScalarField;

    fn mul(self, rhs: &ScalarField) -> ScalarField {
        rhs.scale(self)
    }
}

/// A 2-D vector field, both components on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        x.grid.check_same(&y.grid)?;
        Ok(Self { x, y })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn constant(grid: Grid, vx: f64, vy: f64) -> Self {
        Self {
            x: ScalarField::constant(grid, vx),
            y: ScalarField::constant(grid, vy),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    #[inline]
    pub fn at(&self, k: usize) -> (f64, f64) {
        (self.x.values[k], self.y.values[k])
    }

    pub fn magnitude(&self) -> ScalarField {
        ScalarField {
            grid: self.x.grid,
            values: self
                .x
                .values
                .iter()
                .zip(&self.y.values)
                .map(|(a, b)| a.hypot(*b))
                .collect(),
        }
    }
}

/// `sum(values) * dx * dy`.
pub fn total_mass(field: &ScalarField) -> f64 {
    field.values.iter().sum::<f64>() * field.grid.cell_area()
}

/// Central differences in the interior, one-sided first differences on the
/// boundary rows and columns.
pub fn gradient(field: &ScalarField) -> VectorField {
    let g = field.grid;
    let f = &field.values;
    let mut gx = vec![0.0; g.len()];
    let mut gy = vec![0.0; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.index(i, j);
            gx[k] = if i == 0 {
                (f[k + 1] - f[k]) / g.dx
            } else if i == g.nx - 1 {
                (f[k] - f[k - 1]) / g.dx
            } else {
                (f[k + 1] - f[k - 1]) / (2.0 * g.dx)
            };
            gy[k] = if j == 0 {
                (f[k + g.nx] - f[k]) / g.dy
            } else if j == g.ny - 1 {
                (f[k] - f[k - g.nx]) / g.dy
            } else {
                (f[k + g.nx] - f[k - g.nx]) / (2.0 * g.dy)
            };
        }
    }
    VectorField {
        x: ScalarField { grid: g, values: gx },
        y: ScalarField { grid: g, values: gy },
    }
}

/// Local mass of `field` inside the disc of `radius` around every cell.
pub fn disc_mass(field: &ScalarField, radius: f64) -> Result<ScalarField> {
    let kernel = Kernel::disc(radius, field.grid())?;
    let mass = convolve(field, &kernel)?;
    Ok(clamp_roundoff(field, mass))
}

/// Transform-path round-off can leave `-1e-17` where a non-negative input
/// has no mass; snap those back to zero.
pub(crate) fn clamp_roundoff(input: &ScalarField, mut out: ScalarField) -> ScalarField {
    if input.min() >= 0.0 {
        for v in out.values_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    out
}
