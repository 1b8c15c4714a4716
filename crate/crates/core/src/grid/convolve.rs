use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

use super::{Grid, Kernel, ScalarField};

/// Stencils with at most this many taps are applied directly.
const DIRECT_TAPS: usize = 81;

fn check_kernel(grid: &Grid, kernel: &Kernel) -> Result<()> {
    let (kdx, kdy) = kernel.spacing();
    if kdx == grid.dx && kdy == grid.dy {
        Ok(())
    } else {
        Err(Error::Geometry(format!(
            "kernel sampled at ({kdx}, {kdy}) applied to field with spacing ({}, {})",
            grid.dx, grid.dy
        )))
    }
}

/// Reference double-loop convolution with zero padding:
/// `out[i,j] = sum_{p,q} K[p,q] f[i-p, j-q] dx dy`.
pub fn convolve_direct(field: &ScalarField, kernel: &Kernel) -> Result<ScalarField> {
    let g = *field.grid();
    check_kernel(&g, kernel)?;
    let (mx, my) = kernel.half_widths();
    let (mx, my) = (mx as i64, my as i64);
    let (nx, ny) = (g.nx as i64, g.ny as i64);
    let kw = (2 * mx + 1) as usize;
    let w = kernel.weights();
    let f = field.values();
    let area = g.cell_area();
    let mut out = vec![0.0; g.len()];
    for j in 0..ny {
        let q_lo = (j - ny + 1).max(-my);
        let q_hi = j.min(my);
        for i in 0..nx {
            let p_lo = (i - nx + 1).max(-mx);
            let p_hi = i.min(mx);
            let mut acc = 0.0;
            for q in q_lo..=q_hi {
                let row = ((j - q) * nx) as usize;
                let wrow = (q + my) as usize * kw;
                for p in p_lo..=p_hi {
                    acc += w[wrow + (p + mx) as usize] * f[row + (i - p) as usize];
                }
            }
            out[(j * nx + i) as usize] = acc * area;
        }
    }
    ScalarField::from_values(g, out)
}

/// One-shot convolution; picks the direct or transform path by stencil size.
pub fn convolve(field: &ScalarField, kernel: &Kernel) -> Result<ScalarField> {
    let mut conv = Convolver::new(*field.grid());
    let prepared = conv.prepare(kernel)?;
    Ok(conv.apply(field, &prepared))
}

/// Smallest `2^a 3^b 5^c` not below `n`.
fn smooth_size(n: usize) -> usize {
    (n.max(1)..)
        .find(|&m| {
            let mut m = m;
            for p in [2, 3, 5] {
                while m % p == 0 {
                    m /= p;
                }
            }
            m == 1
        })
        .expect("unbounded search")
}

struct Fft2 {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(planner: &mut FftPlanner<f64>, size: usize) -> Self {
        Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    fn transpose(&self, buf: &mut [Complex<f64>]) {
        let n = self.size;
        for r in 0..n {
            for c in r + 1..n {
                buf.swap(r * n + c, c * n + r);
            }
        }
    }

    /// Result is stored transposed; `inverse` undoes that.
    fn forward(&self, buf: &mut [Complex<f64>], scratch: &mut Vec<Complex<f64>>) {
        scratch.resize(self.forward.get_inplace_scratch_len(), Complex::default());
        self.forward.process_with_scratch(buf, scratch);
        self.transpose(buf);
        self.forward.process_with_scratch(buf, scratch);
    }

    fn inverse(&self, buf: &mut [Complex<f64>], scratch: &mut Vec<Complex<f64>>) {
        scratch.resize(self.inverse.get_inplace_scratch_len(), Complex::default());
        self.inverse.process_with_scratch(buf, scratch);
        self.transpose(buf);
        self.inverse.process_with_scratch(buf, scratch);
    }
}

/// A kernel ready for repeated application on one grid.
#[derive(Clone)]
pub struct PreparedKernel {
    kernel: Kernel,
    spectrum: Option<(usize, Arc<Vec<Complex<f64>>>)>,
}

impl PreparedKernel {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }
}

/// Reusable convolution engine for one grid geometry. Large kernels go
/// through a zero-padded FFT whose padding exceeds the stencil half width,
/// so the circular product equals the linear zero-padded convolution.
pub struct Convolver {
    grid: Grid,
    planner: FftPlanner<f64>,
    plans: HashMap<usize, Arc<Fft2>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver").field("grid", &self.grid).finish()
    }
}

impl Convolver {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            planner: FftPlanner::new(),
            plans: HashMap::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn plan(&mut self, size: usize) -> Arc<Fft2> {
        let planner = &mut self.planner;
        self.plans
            .entry(size)
            .or_insert_with(|| Arc::new(Fft2::new(planner, size)))
            .clone()
    }

    pub fn prepare(&mut self, kernel: &Kernel) -> Result<PreparedKernel> {
        self.prepare_with(kernel, None)
    }

    /// As `prepare`, optionally forcing the transform path on or off.
    pub fn prepare_with(&mut self, kernel: &Kernel, use_fft: Option<bool>) -> Result<PreparedKernel> {
        check_kernel(&self.grid, kernel)?;
        let taps = kernel.weights().len();
        if !use_fft.unwrap_or(taps > DIRECT_TAPS) {
            return Ok(PreparedKernel {
                kernel: kernel.clone(),
                spectrum: None,
            });
        }
        let (mx, my) = kernel.half_widths();
        let size = smooth_size((self.grid.nx + mx).max(self.grid.ny + my));
        let plan = self.plan(size);
        let mut buf = vec![Complex::default(); size * size];
        let area = self.grid.cell_area();
        for q in -(my as i64)..=my as i64 {
            for p in -(mx as i64)..=mx as i64 {
                let r = q.rem_euclid(size as i64) as usize;
                let c = p.rem_euclid(size as i64) as usize;
                buf[r * size + c] = Complex::new(kernel.weight(p, q) * area, 0.0);
            }
        }
        let mut scratch = Vec::new();
        plan.forward(&mut buf, &mut scratch);
        Ok(PreparedKernel {
            kernel: kernel.clone(),
            spectrum: Some((size, Arc::new(buf))),
        })
    }

    pub fn apply(&self, field: &ScalarField, kernel: &PreparedKernel) -> ScalarField {
        match &kernel.spectrum {
            None => convolve_direct(field, &kernel.kernel).expect("grid checked at prepare"),
            Some(_) => self.apply_pair(field, None, kernel).0,
        }
    }

    /// Convolves two fields with the same kernel. On the transform path both
    /// ride in one complex FFT as real and imaginary parts.
    pub fn apply_pair(
        &self,
        a: &ScalarField,
        b: Option<&ScalarField>,
        kernel: &PreparedKernel,
    ) -> (ScalarField, Option<ScalarField>) {
        let g = self.grid;
        let Some((size, spectrum)) = &kernel.spectrum else {
            let fa = convolve_direct(a, &kernel.kernel).expect("grid checked at prepare");
            let fb = b.map(|b| convolve_direct(b, &kernel.kernel).expect("grid checked at prepare"));
            return (fa, fb);
        };
        let size = *size;
        let plan = &self.plans[&size];
        let mut buf = vec![Complex::default(); size * size];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.index(i, j);
                let im = b.map_or(0.0, |b| b.values()[k]);
                buf[j * size + i] = Complex::new(a.values()[k], im);
            }
        }
        let mut scratch = Vec::new();
        plan.forward(&mut buf, &mut scratch);
        let norm = 1.0 / (size * size) as f64;
        for (x, s) in buf.iter_mut().zip(spectrum.iter()) {
            *x = *x * *s * norm;
        }
        plan.inverse(&mut buf, &mut scratch);
        let mut va = Vec::with_capacity(g.len());
        let mut vb = Vec::with_capacity(if b.is_some() { g.len() } else { 0 });
        for j in 0..g.ny {
            for i in 0..g.nx {
                let z = buf[j * size + i];
                va.push(z.re);
                if b.is_some() {
                    vb.push(z.im);
                }
            }
        }
        let fa = ScalarField::from_values(g, va).expect("finite convolution");
        let fb = b.map(|_| ScalarField::from_values(g, vb).expect("finite convolution"));
        (fa, fb)
    }
}
