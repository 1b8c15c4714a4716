//! Conservative finite-volume assembly of the diffusion and transport terms.
//!
//! Every term is written as a difference of face fluxes, and the fluxes on
//! the outer walls are zero, so the discrete divergence sums to zero.

use crate::grid::{Grid, ScalarField};

/// Koren limiter in the `psi(theta)` form: third-order `1/3 + theta/6`
/// where the solution is smooth, clipped to `[0, min(1, theta)]`.
#[inline]
pub fn koren(theta: f64) -> f64 {
    (1.0 / 3.0 + theta / 6.0).min(theta).min(1.0).max(0.0)
}

/// Limited value at the face between `centre` and `downwind`, reconstructed
/// from the upwind side: `w_c + psi(theta) (w_d - w_c)` with
/// `theta = (w_c - w_u) / (w_d - w_c)`.
#[inline]
pub fn limited_face_value(upwind: f64, centre: f64, downwind: f64) -> f64 {
    let ahead = downwind - centre;
    if ahead == 0.0 {
        return centre;
    }
    let behind = centre - upwind;
    centre + koren(behind / ahead) * ahead
}

/// Face velocities on the interior faces of a grid.
///
/// `x` holds `(nx-1) * ny` values for the face between `(i, j)` and
/// `(i+1, j)` at `j * (nx-1) + i`; `y` holds `nx * (ny-1)` values for the face
/// between `(i, j)` and `(i, j+1)` at `j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceVelocity {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FaceVelocity {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            x: vec![0.0; (grid.nx - 1) * grid.ny],
            y: vec![0.0; grid.nx * (grid.ny - 1)],
        }
    }
}

/// `div(D grad w)` with zero-flux walls, as face-flux differences.
pub fn diffusion(w: &ScalarField, coefficient: f64) -> ScalarField {
    let g = *w.grid();
    let f = w.values();
    let mut out = vec![0.0; g.len()];
    if coefficient != 0.0 {
        let cx = coefficient / (g.dx * g.dx);
        let cy = coefficient / (g.dy * g.dy);
        for j in 0..g.ny {
            for i in 0..g.nx - 1 {
                let k = g.index(i, j);
                let flux = cx * (f[k + 1] - f[k]);
                out[k] += flux;
                out[k + 1] -= flux;
            }
        }
        for j in 0..g.ny - 1 {
            for i in 0..g.nx {
                let k = g.index(i, j);
                let flux = cy * (f[k + g.nx] - f[k]);
                out[k] += flux;
                out[k + g.nx] -= flux;
            }
        }
    }
    ScalarField::from_values(g, out).expect("finite diffusion term")
}

/// `-div(a w)` for face velocities `a`, with `w` at each face reconstructed
/// from the upwind side through the Koren limiter. Missing neighbours past
/// a wall are taken equal to the wall cell, which drops that face to first
/// order upwinding.
pub fn transport(w: &ScalarField, velocity: &FaceVelocity) -> ScalarField {
    let g = *w.grid();
    let f = w.values();
    let (nx, ny) = (g.nx, g.ny);
    let mut out = vec![0.0; g.len()];
    let inv_dx = 1.0 / g.dx;
    let inv_dy = 1.0 / g.dy;

    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx - 1 {
            let a = velocity.x[j * (nx - 1) + i];
            if a == 0.0 {
                continue;
            }
            let k = row + i;
            let face = if a > 0.0 {
                let up = if i > 0 { f[k - 1] } else { f[k] };
                limited_face_value(up, f[k], f[k + 1])
            } else {
                let up = if i + 2 < nx { f[k + 2] } else { f[k + 1] };
                limited_face_value(up, f[k + 1], f[k])
            };
            let flux = a * face * inv_dx;
            out[k] -= flux;
            out[k + 1] += flux;
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            let a = velocity.y[j * nx + i];
            if a == 0.0 {
                continue;
            }
            let k = j * nx + i;
            let face = if a > 0.0 {
                let up = if j > 0 { f[k - nx] } else { f[k] };
                limited_face_value(up, f[k], f[k + nx])
            } else {
                let up = if j + 2 < ny { f[k + 2 * nx] } else { f[k + nx] };
                limited_face_value(up, f[k + nx], f[k])
            };
            let flux = a * face * inv_dy;
            out[k] -= flux;
            out[k + nx] += flux;
        }
    }
    ScalarField::from_values(g, out).expect("finite transport term")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn koren_limits() {
        assert_eq!(koren(-1.0), 0.0);
        assert_eq!(koren(0.0), 0.0);
        assert_relative_eq!(koren(1.0), 0.5);
        assert_eq!(koren(100.0), 1.0);
        assert_relative_eq!(koren(0.3), 0.3);
    }

    #[test]
    fn face_value_stays_between_neighbours() {
        for (u, c, d) in [(0.0, 1.0, 3.0), (5.0, 1.0, 0.0), (1.0, 2.0, 2.0), (0.0, 4.0, 0.0)] {
            let v = limited_face_value(u, c, d);
            assert!(v >= c.min(d) - 1e-15 && v <= c.max(d) + 1e-15, "{u} {c} {d} -> {v}");
        }
    }

    #[test]
    fn linear_data_reconstructs_midpoint() {
        assert_relative_eq!(limited_face_value(1.0, 2.0, 3.0), 2.5);
        assert_relative_eq!(limited_face_value(3.0, 2.0, 1.0), 1.5);
    }

    #[test]
    fn diffusion_of_spike_is_five_point_laplacian() {
        let g = Grid::new(9, 9, 0.5, 0.5).unwrap();
        let mut w = ScalarField::zeros(g);
        w.set(4, 4, 2.0);
        let d = diffusion(&w, 5.0);
        let c = 5.0 / 0.25;
        assert_relative_eq!(d.get(4, 4), -4.0 * c * 2.0);
        for (i, j) in [(3, 4), (5, 4), (4, 3), (4, 5)] {
            assert_relative_eq!(d.get(i, j), c * 2.0);
        }
        assert_eq!(d.get(3, 3), 0.0);
    }
}
