use crate::error::{Error, Result};

use super::Grid;

/// Firing-kernel weights below this fraction of the peak rate are dropped.
pub const FIRING_TRUNCATION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Indicator of a disc; convolution gives local mass.
    Disc,
    /// Unit-integral tent used for cohesion.
    Attraction,
    /// Unit-integral tent used for crowding.
    Repulsion,
    /// Exponentially decaying area-fire rate.
    Firing,
}

/// Compact convolution kernel sampled at cell-centre offsets.
///
/// Weights cover offsets `-mx..=mx` by `-my..=my` and are stored row-major
/// with the x offset varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    kind: KernelKind,
    radius: f64,
    spacing: (f64, f64),
    mx: usize,
    my: usize,
    weights: Vec<f64>,
}

impl Kernel {
    fn sample(
        kind: KernelKind,
        radius: f64,
        grid: &Grid,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mx = (radius / grid.dx - 1e-9).ceil().max(0.0) as usize;
        let my = (radius / grid.dy - 1e-9).ceil().max(0.0) as usize;
        let mut weights = Vec::with_capacity((2 * mx + 1) * (2 * my + 1));
        for q in -(my as i64)..=my as i64 {
            for p in -(mx as i64)..=mx as i64 {
                weights.push(f(p as f64 * grid.dx, q as f64 * grid.dy));
            }
        }
        Self {
            kind,
            radius,
            spacing: (grid.dx, grid.dy),
            mx,
            my,
            weights,
        }
    }

    /// Indicator of the closed disc of `radius`.
    pub fn disc(radius: f64, grid: &Grid) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("radius", format!("must be positive, got {radius}")));
        }
        let r2 = radius * radius * (1.0 + 1e-12);
        Ok(Self::sample(KernelKind::Disc, radius, grid, |x, y| {
            if x * x + y * y <= r2 {
                1.0
            } else {
                0.0
            }
        }))
    }

    fn tent(kind: KernelKind, radius: f64, grid: &Grid) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("radius", format!("must be positive, got {radius}")));
        }
        let mut k = Self::sample(kind, radius, grid, |x, y| (1.0 - x.hypot(y) / radius).max(0.0));
        let mass: f64 = k.weights.iter().sum::<f64>() * grid.cell_area();
        for w in &mut k.weights {
            *w /= mass;
        }
        Ok(k)
    }

    /// Cohesion kernel: linear decay to zero at `radius`, unit integral.
    pub fn attraction(radius: f64, grid: &Grid) -> Result<Self> {
        Self::tent(KernelKind::Attraction, radius, grid)
    }

    /// Crowding kernel: linear decay to zero at `radius`, unit integral.
    pub fn repulsion(radius: f64, grid: &Grid) -> Result<Self> {
        Self::tent(KernelKind::Repulsion, radius, grid)
    }

    /// Arbitrary weights on a `(2mx+1) x (2my+1)` stencil.
    pub fn from_weights(
        kind: KernelKind,
        radius: f64,
        grid: &Grid,
        (mx, my): (usize, usize),
        weights: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != (2 * mx + 1) * (2 * my + 1) {
            return Err(Error::Geometry(format!(
                "{} weights do not fill a {}x{} stencil",
                weights.len(),
                2 * mx + 1,
                2 * my + 1
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("weights", "must be finite and non-negative"));
        }
        Ok(Self {
            kind,
            radius,
            spacing: (grid.dx, grid.dy),
            mx,
            my,
            weights,
        })
    }

    /// Cell size the kernel was sampled for.
    pub fn spacing(&self) -> (f64, f64) {
        self.spacing
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Half widths of the stencil in cells.
    pub fn half_widths(&self) -> (usize, usize) {
        (self.mx, self.my)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at cell offset `(p, q)`, zero outside the stencil.
    pub fn weight(&self, p: i64, q: i64) -> f64 {
        if p.unsigned_abs() as usize > self.mx || q.unsigned_abs() as usize > self.my {
            return 0.0;
        }
        let w = 2 * self.mx + 1;
        self.weights[(q + self.my as i64) as usize * w + (p + self.mx as i64) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|w| *w == 0.0)
    }
}

/// `beta * exp(-nu * sqrt(|dx^2 + dy^2 - r_op|))` sampled at cell-centre
/// offsets, with weights under `FIRING_TRUNCATION * beta` set to zero.
///
/// `r_op` enters exactly as written, subtracted from the squared distance.
pub fn build_firing_kernel(beta: f64, nu: f64, r_op: f64, grid: &Grid) -> Result<Kernel> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", format!("must be non-negative, got {beta}")));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::param("nu", format!("must be positive, got {nu}")));
    }
    if !(r_op >= 0.0 && r_op.is_finite()) {
        return Err(Error::param("r_op", format!("must be non-negative, got {r_op}")));
    }
    if beta == 0.0 {
        return Kernel::from_weights(KernelKind::Firing, 0.0, grid, (0, 0), vec![0.0]);
    }
    // weight >= cut  <=>  |s - r_op| <= (ln(1/cut) / nu)^2 with s the squared distance
    let reach = (1.0 / FIRING_TRUNCATION).ln() / nu;
    let radius = (r_op + reach * reach).sqrt();
    let cut = FIRING_TRUNCATION * beta;
    Ok(Kernel::sample(KernelKind::Firing, radius, grid, |x, y| {
        let w = beta * (-nu * (x * x + y * y - r_op).abs().sqrt()).exp();
        if w < cut {
            0.0
        } else {
            w
        }
    }))
}
