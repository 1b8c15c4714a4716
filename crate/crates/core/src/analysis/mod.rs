//! Metrics over runs of either engine: centroids, formation shape,
//! encirclement, rotation of the inter-centroid axis, ensembles and
//! engine-to-engine comparison.
//!
//! Both engines are reduced to a [`Frame`], a weighted point set per force
//! (cell masses for the continuum model, one unit per living agent for the
//! automaton), so every metric is shared.

mod compare;
mod ensemble;
mod series;

pub use compare::{compare, family, ComparisonReport};
pub use ensemble::{ensemble, EnsembleConfig, EnsembleReport, RunOutcome, THRESHOLD_SWEEP};
pub use series::{run_ca, run_pde, run_pde_with, MetricRecord, MetricSeries, SeriesBuilder};

use std::f64::consts::PI;

use crate::ca::{Agent, Side};
use crate::grid::ScalarField;
use crate::pde::PdeState;

/// Angular sectors used by [`encirclement`].
pub const SECTORS: usize = 16;

/// Default rotation needed to call a run precessing.
pub const PRECESSION_THRESHOLD: f64 = PI / 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mass {
    pub x: f64,
    pub y: f64,
    pub m: f64,
}

/// Mass distribution of both forces at one instant. Index 0 is u / Red.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub forces: [Vec<Mass>; 2],
}

impl Frame {
    pub fn from_fields(t: f64, u: &ScalarField, v: &ScalarField) -> Self {
        Self { t, forces: [field_masses(u), field_masses(v)] }
    }

    pub fn from_pde(state: &PdeState) -> Self {
        Self::from_fields(state.t, &state.u, &state.v)
    }

    /// Living agents at their lattice coordinates.
    pub fn from_agents(t: f64, agents: &[Agent]) -> Self {
        let mut forces = [Vec::new(), Vec::new()];
        for a in agents.iter().filter(|a| a.health.is_living()) {
            let k = if a.side == Side::Red { 0 } else { 1 };
            forces[k].push(Mass { x: a.pos.0 as f64, y: a.pos.1 as f64, m: 1.0 });
        }
        Self { t, forces }
    }

    pub fn mass(&self, force: usize) -> f64 {
        self.forces[force].iter().fold(0.0, |s, p| s + p.m)
    }
}

fn field_masses(f: &ScalarField) -> Vec<Mass> {
    let g = *f.grid();
    let area = g.cell_area();
    let mut out = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let w = f.get(i, j);
            if w > 0.0 {
                out.push(Mass { x: g.x(i), y: g.y(j), m: w * area });
            }
        }
    }
    out
}

/// Mass-weighted mean position; `None` for an empty or massless set.
pub fn centroid(points: &[Mass]) -> Option<(f64, f64)> {
    let (mut m, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for p in points {
        m += p.m;
        sx += p.m * p.x;
        sy += p.m * p.y;
    }
    (m > 0.0).then(|| (sx / m, sy / m))
}

/// √(λ_max/λ_min) of the mass-weighted spatial covariance.
///
/// `None` for an empty set; infinite when the set is degenerate (a single
/// point or a straight line).
pub fn front_aspect(points: &[Mass]) -> Option<f64> {
    let (cx, cy) = centroid(points)?;
    let (mut m, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.x - cx, p.y - cy);
        m += p.m;
        sxx += p.m * dx * dx;
        syy += p.m * dy * dy;
        sxy += p.m * dx * dy;
    }
    let (a, b, c) = (sxx / m, syy / m, sxy / m);
    let mean = 0.5 * (a + b);
    let half_gap = (0.25 * (a - b) * (a - b) + c * c).sqrt();
    let hi = mean + half_gap;
    // the smaller root by Vieta, which keeps its precision for thin shapes
    let det = a * b - c * c;
    let lo = if hi > 0.0 { det / hi } else { 0.0 };
    if lo <= 1e-12 * hi.max(f64::MIN_POSITIVE) {
        return Some(f64::INFINITY);
    }
    Some((hi / lo).sqrt())
}

/// Fraction of [`SECTORS`] equal angular sectors around the centroid of
/// `surrounded` in which `surrounding` has mass, within `radius` of that
/// centroid. A sector counts when its mass exceeds 1% of the per-sector
/// mean.
pub fn encirclement(surrounded: &[Mass], surrounding: &[Mass], radius: f64) -> f64 {
    let Some((cx, cy)) = centroid(surrounded) else {
        return 0.0;
    };
    let mut bins = [0.0; SECTORS];
    let r2 = radius * radius;
    for p in surrounding {
        let (dx, dy) = (p.x - cx, p.y - cy);
        if dx * dx + dy * dy > r2 {
            continue;
        }
        bins[sector(dx, dy)] += p.m;
    }
    let total: f64 = bins.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let floor = 0.01 * total / SECTORS as f64;
    bins.iter().filter(|&&b| b > floor).count() as f64 / SECTORS as f64
}

fn sector(dx: f64, dy: f64) -> usize {
    if dx == 0.0 && dy == 0.0 {
        return 0;
    }
    let a = dy.atan2(dx).rem_euclid(2.0 * PI);
    ((a / (2.0 * PI) * SECTORS as f64) as usize).min(SECTORS - 1)
}

/// Wraps an angle difference into [-π, π).
pub(crate) fn wrap(d: f64) -> f64 {
    (d + PI).rem_euclid(2.0 * PI) - PI
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rotation {
    Clockwise,
    Anticlockwise,
    None,
}

impl Rotation {
    pub fn name(self) -> &'static str {
        match self {
            Rotation::Clockwise => "clockwise",
            Rotation::Anticlockwise => "anticlockwise",
            Rotation::None => "none",
        }
    }

    pub fn classify(total_rotation: f64, threshold: f64) -> Self {
        if total_rotation > threshold {
            Rotation::Anticlockwise
        } else if total_rotation < -threshold {
            Rotation::Clockwise
        } else {
            Rotation::None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precession {
    pub direction: Rotation,
    /// Signed, anticlockwise positive.
    pub total_rotation: f64,
}
