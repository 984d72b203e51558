//! Cell-centered grids, scalar fields and the Neumann diffusion operator.
//!
//! Cells are stored row-major: cell `(i, j)` lives at `j * nx + i`, with `i`
//! along x and `j` along y. The Laplacian uses the standard 5-point stencil and
//! reflective ghost cells, so the normal flux through the boundary is zero and
//! the stencil conserves the domain integral exactly.

use std::ops::{Index, IndexMut};

use crate::error::{Result, SeiqrError};

/// Relative residual at which the implicit diffusion solve stops.
pub const DIFFUSION_TOL: f64 = 1e-12;
/// Hard cap on conjugate gradient iterations.
pub const DIFFUSION_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64) -> Self {
        assert!(nx >= 1 && ny >= 1, "grid needs at least one cell per axis");
        assert!(hx > 0.0 && hy > 0.0, "cell widths must be positive");
        Self { nx, ny, hx, hy }
    }

    pub fn square(n: usize, h: f64) -> Self {
        Self::new(n, n, h, h)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn area(&self) -> f64 {
        self.len() as f64 * self.cell_area()
    }
}

/// A scalar grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
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
            return Err(SeiqrError::Shape(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(i, j));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when every cell holds exactly the same value.
    pub fn is_uniform(&self) -> bool {
        let first = self.values[0];
        self.values.iter().all(|&v| v == first)
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: f64, other: &Field) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
    }

    /// Cell-weighted inner product `sum f_ij g_ij hx hy`.
    pub fn inner(&self, other: &Field) -> f64 {
        dot(&self.values, &other.values) * self.grid.cell_area()
    }

    /// Cell-weighted L1 norm.
    pub fn norm_l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_area()
    }
}

impl Index<usize> for Field {
    type Output = f64;

    fn index(&self, cell: usize) -> &f64 {
        &self.values[cell]
    }
}

impl IndexMut<usize> for Field {
    fn index_mut(&mut self, cell: usize) -> &mut f64 {
        &mut self.values[cell]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Writes the Neumann Laplacian of `src` into `dst`.
fn laplacian_into(grid: &Grid, src: &[f64], dst: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let cx = 1.0 / (grid.hx * grid.hx);
    let cy = 1.0 / (grid.hy * grid.hy);
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx {
            let k = row + i;
            let c = src[k];
            // A reflected ghost equals the interior value, so a missing neighbor
            // contributes nothing.
            let mut acc = 0.0;
            if i > 0 {
                acc += cx * (src[k - 1] - c);
            }
            if i + 1 < nx {
                acc += cx * (src[k + 1] - c);
            }
            if j > 0 {
                acc += cy * (src[k - nx] - c);
            }
            if j + 1 < ny {
                acc += cy * (src[k + nx] - c);
            }
            dst[k] = acc;
        }
    }
}

/// Discrete Laplacian with homogeneous Neumann boundary.
pub fn laplacian_apply(f: &Field) -> Field {
    let mut out = Field::zeros(f.grid);
    laplacian_into(&f.grid, &f.values, &mut out.values);
    out
}

/// `(I - coeff * Laplacian) x` into `dst`.
fn helmholtz_into(grid: &Grid, coeff: f64, src: &[f64], dst: &mut [f64]) {
    laplacian_into(grid, src, dst);
    for (d, s) in dst.iter_mut().zip(src) {
        *d = s - coeff * *d;
    }
}

/// Solves `(I - dt * lambda * Laplacian) u = rhs` by conjugate gradients.
///
/// The operator is symmetric positive definite and an M-matrix for any
/// `lambda >= 0`, `dt > 0`. `lambda == 0` returns `rhs` unchanged.
pub fn implicit_diffusion_solve(rhs: &Field, lambda: f64, dt: f64) -> Result<Field> {
    debug_assert!(lambda >= 0.0 && dt > 0.0);
    let coeff = lambda * dt;
    if coeff == 0.0 {
        return Ok(rhs.clone());
    }
    let grid = rhs.grid;
    let b = &rhs.values;
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(Field::zeros(grid));
    }
    let target = DIFFUSION_TOL * b_norm;

    // The operator is a small perturbation of the identity, so rhs is a good start.
    let mut x = b.clone();
    let mut ap = vec![0.0; b.len()];
    helmholtz_into(&grid, coeff, &x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);

    let mut iterations = 0;
    while rr.sqrt() > target {
        if iterations == DIFFUSION_MAX_ITER {
            return Err(SeiqrError::NonConvergence {
                iterations,
                residual: rr.sqrt() / b_norm,
            });
        }
        helmholtz_into(&grid, coeff, &p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for k in 0..x.len() {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for k in 0..p.len() {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_next;
        iterations += 1;
    }
    Ok(Field { grid, values: x })
}

/// Midpoint-rule integral over the domain.
pub fn integrate_domain(f: &Field) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_area()
}

/// Trapezoid weight of sample `step` on a grid of `nt + 1` samples.
pub fn trapezoid_weight(step: usize, nt: usize, dt: f64) -> f64 {
    if step == 0 || step == nt {
        0.5 * dt
    } else {
        dt
    }
}

/// Trapezoidal rule over `series.len() - 1` uniform intervals of width `dt`.
pub fn integrate_time(series: &[f64], dt: f64) -> f64 {
    match series.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = series[1..n - 1].iter().sum();
            dt * (0.5 * (series[0] + series[n - 1]) + interior)
        }
    }
}
