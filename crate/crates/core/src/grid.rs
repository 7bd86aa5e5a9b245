//! Uniform cell-centred grid with homogeneous Neumann boundaries.
//!
//! Cells are indexed row-major, `k = j * nx + i`, with `i` along x.
//! Vertical faces (x-fluxes) are indexed `j * (nx + 1) + i` where face `i`
//! sits on the left of cell `i`; horizontal faces (y-fluxes) are indexed
//! `j * nx + i` where face `j` sits below cell row `j`. Boundary faces carry
//! zero flux, which is the discrete form of the no-flux condition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 2 cells per axis, got {nx}x{ny}")]
    TooFewCells { nx: usize, ny: usize },
    #[error("domain lengths must be positive and finite, got lx={lx}, ly={ly}")]
    BadLength { lx: f64, ly: f64 },
    #[error("cells must be square: lx/nx = {hx} but ly/ny = {hy}")]
    NonSquare { hx: f64, hy: f64 },
    #[error("field has {actual} values, grid needs {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("field contains a non-finite value at cell {index}")]
    NonFinite { index: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("boundary face {index} of the {axis}-flux is {value}, expected 0")]
    BoundaryFlux { axis: char, index: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    h: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        if nx < 2 || ny < 2 {
            return Err(GridError::TooFewCells { nx, ny });
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(GridError::BadLength { lx, ly });
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        if (hx - hy).abs() > 1e-12 * hx.max(hy) {
            return Err(GridError::NonSquare { hx, hy });
        }
        Ok(Self { nx, ny, lx, ly, h: hx })
    }

    /// `n x n` cells on `[0, 1]^2`.
    pub fn unit_square(n: usize) -> Result<Self, GridError> {
        Self::new(n, n, 1.0, 1.0)
    }

    /// Single-row grid used for one-dimensional checks.
    ///
    /// Internally this is `nx x 1`; only reachable through this constructor
    /// because the general constructor requires two cells per axis.
    pub fn strip(nx: usize, lx: f64) -> Result<Self, GridError> {
        if nx < 2 {
            return Err(GridError::TooFewCells { nx, ny: 1 });
        }
        if !(lx > 0.0 && lx.is_finite()) {
            return Err(GridError::BadLength { lx, ly: lx });
        }
        let h = lx / nx as f64;
        Ok(Self { nx, ny: 1, lx, ly: h, h })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }
    pub fn x_faces(&self) -> usize {
        (self.nx + 1) * self.ny
    }
    pub fn y_faces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Cell centre of cell `(i, j)`.
    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    #[inline]
    pub fn center_of(&self, k: usize) -> (f64, f64) {
        self.center(k % self.nx, k / self.nx)
    }
}

/// One scalar unknown sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.cells() {
            return Err(GridError::LengthMismatch { expected: grid.cells(), actual: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    /// Construction without the finiteness scan, for internal hot paths.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cells());
        Self { grid, values }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self { grid, values: vec![c; grid.cells()] }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Sample `f(x, y)` at every cell centre.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let values = par::build(grid.cells(), |k| {
            let (x, y) = grid.center_of(k);
            f(x, y)
        });
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
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
        -par::max_by(self.values.len(), |k| -self.values[k])
    }

    pub fn max(&self) -> f64 {
        par::max_by(self.values.len(), |k| self.values[k])
    }

    /// Pointwise map into a new field on the same grid.
    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let v = &self.values;
        Self { grid: self.grid, values: par::build(v.len(), |k| f(v[k])) }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map<F>(&self, other: &ScalarField, f: F) -> Result<Self, GridError>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        let (a, b) = (&self.values, &other.values);
        Ok(Self { grid: self.grid, values: par::build(a.len(), |k| f(a[k], b[k])) })
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }
}

/// Fluxes on cell faces.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField {
    grid: GridSpec,
    xflux: Vec<f64>,
    yflux: Vec<f64>,
}

impl FluxField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, xflux: vec![0.0; grid.x_faces()], yflux: vec![0.0; grid.y_faces()] }
    }

    /// Build from raw face arrays; boundary faces are not checked here, see
    /// [`FluxField::check_boundary`].
    pub fn from_parts(grid: GridSpec, xflux: Vec<f64>, yflux: Vec<f64>) -> Result<Self, GridError> {
        if xflux.len() != grid.x_faces() {
            return Err(GridError::LengthMismatch { expected: grid.x_faces(), actual: xflux.len() });
        }
        if yflux.len() != grid.y_faces() {
            return Err(GridError::LengthMismatch { expected: grid.y_faces(), actual: yflux.len() });
        }
        Ok(Self { grid, xflux, yflux })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn xflux(&self) -> &[f64] {
        &self.xflux
    }
    pub fn yflux(&self) -> &[f64] {
        &self.yflux
    }

    pub fn check_boundary(&self) -> Result<(), GridError> {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        for j in 0..ny {
            for i in [0, nx] {
                let k = j * (nx + 1) + i;
                if self.xflux[k] != 0.0 {
                    return Err(GridError::BoundaryFlux { axis: 'x', index: k, value: self.xflux[k] });
                }
            }
        }
        for j in [0, ny] {
            for i in 0..nx {
                let k = j * nx + i;
                if self.yflux[k] != 0.0 {
                    return Err(GridError::BoundaryFlux { axis: 'y', index: k, value: self.yflux[k] });
                }
            }
        }
        Ok(())
    }

    /// Largest face magnitude over both axes.
    pub fn max_abs(&self) -> f64 {
        let mx = par::max_by(self.xflux.len(), |k| self.xflux[k].abs());
        let my = par::max_by(self.yflux.len(), |k| self.yflux[k].abs());
        mx.max(my).max(0.0)
    }

    /// Pointwise product of two face fields.
    pub fn mul(&self, other: &FluxField) -> Result<Self, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        let (ax, bx) = (&self.xflux, &other.xflux);
        let (ay, by) = (&self.yflux, &other.yflux);
        Ok(Self {
            grid: self.grid,
            xflux: par::build(ax.len(), |k| ax[k] * bx[k]),
            yflux: par::build(ay.len(), |k| ay[k] * by[k]),
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        let (x, y) = (&self.xflux, &self.yflux);
        Self { grid: self.grid, xflux: par::build(x.len(), |k| s * x[k]), yflux: par::build(y.len(), |k| s * y[k]) }
    }
}

/// Five-point Neumann Laplacian.
///
/// Missing neighbours are mirrored ghost cells, so the corresponding face
/// difference is zero. The arithmetic is arranged exactly as
/// `flux_divergence(face_gradient(f))`, which makes the two agree bitwise.
pub fn laplacian_neumann(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let mut out = vec![0.0; g.cells()];
    laplacian_into(&g, f.values(), &mut out);
    ScalarField::from_raw(g, out)
}

pub(crate) fn laplacian_into(g: &GridSpec, f: &[f64], out: &mut [f64]) {
    let (nx, ny, h) = (g.nx, g.ny, g.h);
    par::fill(out, |k| {
        let i = k % nx;
        let j = k / nx;
        let c = f[k];
        let east = if i + 1 < nx { (f[k + 1] - c) / h } else { 0.0 };
        let west = if i > 0 { (c - f[k - 1]) / h } else { 0.0 };
        let north = if j + 1 < ny { (f[k + nx] - c) / h } else { 0.0 };
        let south = if j > 0 { (c - f[k - nx]) / h } else { 0.0 };
        (east - west) / h + (north - south) / h
    });
}

/// Face differences `(f_right - f_left) / h`; zero on boundary faces.
pub fn face_gradient(f: &ScalarField) -> FluxField {
    let g = *f.grid();
    let (nx, ny, h) = (g.nx, g.ny, g.h);
    let v = f.values();
    let xflux = par::build(g.x_faces(), |k| {
        let j = k / (nx + 1);
        let i = k % (nx + 1);
        if i == 0 || i == nx {
            0.0
        } else {
            let c = j * nx + i;
            (v[c] - v[c - 1]) / h
        }
    });
    let yflux = par::build(g.y_faces(), |k| {
        let j = k / nx;
        let i = k % nx;
        if j == 0 || j == ny {
            0.0
        } else {
            let c = j * nx + i;
            (v[c] - v[c - nx]) / h
        }
    });
    FluxField { grid: g, xflux, yflux }
}

/// Upwinded transport flux `velocity * density_upwind` per face.
///
/// The upwind cell is the left (lower) cell for positive velocity and the
/// right (upper) cell otherwise. Boundary faces stay zero.
pub fn upwind_advective_flux(density: &ScalarField, velocity: &FluxField) -> Result<FluxField, GridError> {
    let g = *density.grid();
    if g != velocity.grid {
        return Err(GridError::GridMismatch);
    }
    let (nx, ny) = (g.nx, g.ny);
    let d = density.values();
    let (vx, vy) = (&velocity.xflux, &velocity.yflux);
    let xflux = par::build(g.x_faces(), |k| {
        let j = k / (nx + 1);
        let i = k % (nx + 1);
        if i == 0 || i == nx {
            return 0.0;
        }
        let c = j * nx + i;
        let vel = vx[k];
        if vel > 0.0 {
            vel * d[c - 1]
        } else {
            vel * d[c]
        }
    });
    let yflux = par::build(g.y_faces(), |k| {
        let j = k / nx;
        if j == 0 || j == ny {
            return 0.0;
        }
        let vel = vy[k];
        if vel > 0.0 {
            vel * d[k - nx]
        } else {
            vel * d[k]
        }
    });
    Ok(FluxField { grid: g, xflux, yflux })
}

/// Cell-wise discrete divergence of a face flux.
pub fn flux_divergence(flux: &FluxField) -> Result<ScalarField, GridError> {
    flux.check_boundary()?;
    let g = flux.grid;
    let (nx, h) = (g.nx, g.h);
    let (fx, fy) = (&flux.xflux, &flux.yflux);
    let values = par::build(g.cells(), |k| {
        let i = k % nx;
        let j = k / nx;
        let xk = j * (nx + 1) + i;
        let east = fx[xk + 1];
        let west = fx[xk];
        let north = fy[k + nx];
        let south = fy[k];
        (east - west) / h + (north - south) / h
    });
    Ok(ScalarField::from_raw(g, values))
}

/// Midpoint quadrature `h^2 * sum(f)`.
pub fn integrate(f: &ScalarField) -> f64 {
    f.grid().cell_area() * par::sum(f.values())
}

/// Weighted Dirichlet integral `h^2 * sum_faces (df/h)^2 / max(wbar, floor)`.
///
/// `wbar` is the arithmetic mean of the two cells sharing the face.
pub fn dirichlet_quotient(f: &ScalarField, weight: &ScalarField, floor: f64) -> Result<f64, GridError> {
    if f.grid() != weight.grid() {
        return Err(GridError::GridMismatch);
    }
    let wv = weight.values();
    Ok(face_sum(f, |a, b| ((wv[a] + wv[b]) * 0.5).max(floor)))
}

/// Unweighted Dirichlet integral `h^2 * sum_faces (df/h)^2`.
pub fn dirichlet_integral(f: &ScalarField) -> f64 {
    face_sum(f, |_, _| 1.0)
}

fn face_sum<W>(f: &ScalarField, weight: W) -> f64
where
    W: Fn(usize, usize) -> f64 + Sync + Send,
{
    let g = f.grid();
    let (nx, ny) = (g.nx, g.ny);
    let v = f.values();
    // (df/h)^2 * h^2 == df^2
    par::sum_by(g.cells(), |k| {
        let i = k % nx;
        let j = k / nx;
        let mut acc = 0.0;
        if i + 1 < nx {
            let d = v[k + 1] - v[k];
            acc += d * d / weight(k, k + 1);
        }
        if j + 1 < ny {
            let d = v[k + nx] - v[k];
            acc += d * d / weight(k, k + nx);
        }
        acc
    })
}

/// Face gradients averaged back to cell centres, `(gx, gy)` per cell.
///
/// Boundary faces contribute their zero flux to the average.
pub fn center_gradient(f: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let grad = face_gradient(f);
    let g = *f.grid();
    let nx = g.nx;
    let (fx, fy) = (&grad.xflux, &grad.yflux);
    let gx = par::build(g.cells(), |k| {
        let (i, j) = (k % nx, k / nx);
        let xk = j * (nx + 1) + i;
        0.5 * (fx[xk] + fx[xk + 1])
    });
    let gy = par::build(g.cells(), |k| 0.5 * (fy[k] + fy[k + nx]));
    (gx, gy)
}

/// Arithmetic face average of a cell field; zero on boundary faces.
pub fn face_average(f: &ScalarField) -> FluxField {
    let g = *f.grid();
    let (nx, ny) = (g.nx, g.ny);
    let v = f.values();
    let xflux = par::build(g.x_faces(), |k| {
        let j = k / (nx + 1);
        let i = k % (nx + 1);
        if i == 0 || i == nx {
            0.0
        } else {
            let c = j * nx + i;
            0.5 * (v[c] + v[c - 1])
        }
    });
    let yflux = par::build(g.y_faces(), |k| {
        let j = k / nx;
        if j == 0 || j == ny {
            0.0
        } else {
            0.5 * (v[k] + v[k - nx])
        }
    });
    FluxField { grid: g, xflux, yflux }
}
