//! Uniform tensor grids on a truncated box, densities on them, and the
//! trapezoid quadrature / central-difference Laplacian used by the solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Uniform grid on `[lo, hi]` with `m[i]` nodes per axis (boundary included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    m: Vec<usize>,
    dx: Vec<f64>,
}

impl Grid {
    pub fn new(lo: &[f64], hi: &[f64], m: &[usize]) -> Result<Self> {
        let n = lo.len();
        if !(n == 1 || n == 2) || hi.len() != n || m.len() != n {
            return Err(Error::Domain("grid must be 1- or 2-dimensional with matching axes".into()));
        }
        for i in 0..n {
            if !(lo[i].is_finite() && hi[i].is_finite() && lo[i] < hi[i]) {
                return Err(Error::Domain(format!("axis {i}: need lo < hi, got [{}, {}]", lo[i], hi[i])));
            }
            if m[i] < 16 {
                return Err(Error::Domain(format!("axis {i}: need at least 16 nodes, got {}", m[i])));
            }
        }
        let dx = (0..n).map(|i| (hi[i] - lo[i]) / (m[i] - 1) as f64).collect();
        Ok(Grid { n, lo: lo.to_vec(), hi: hi.to_vec(), m: m.to_vec(), dx })
    }

    /// Box `[c − w, c + w]ⁿ` with `m` nodes per axis.
    pub fn centered(center: &[f64], half_width: f64, m: usize) -> Result<Self> {
        let lo: Vec<f64> = center.iter().map(|c| c - half_width).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + half_width).collect();
        Grid::new(&lo, &hi, &vec![m; center.len()])
    }

    /// Symmetric box `[−w, w]ⁿ`.
    pub fn cube(n: usize, half_width: f64, m: usize) -> Result<Self> {
        Grid::centered(&vec![0.0; n], half_width, m)
    }

    /// The same grid translated by whole cells.
    pub fn shifted(&self, cells: &[i64]) -> Grid {
        let mut g = self.clone();
        for i in 0..self.n {
            let off = cells[i] as f64 * self.dx[i];
            g.lo[i] = self.lo[i] + off;
            g.hi[i] = self.hi[i] + off;
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
    pub fn m(&self) -> &[usize] {
        &self.m
    }
    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.m.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of the fastest-varying axis (the last one).
    pub fn row_len(&self) -> usize {
        self.m[self.n - 1]
    }

    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        self.lo[axis] + k as f64 * self.dx[axis]
    }

    pub fn coords(&self, axis: usize) -> Vec<f64> {
        (0..self.m[axis]).map(|k| self.coord(axis, k)).collect()
    }

    /// Multi-index of flat node `idx` (row-major, axis 0 slowest).
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.n == 1 {
            [idx, 0]
        } else {
            [idx / self.m[1], idx % self.m[1]]
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let k = self.unflatten(idx);
        (0..self.n).map(|a| self.coord(a, k[a])).collect()
    }

    /// Trapezoid weights along one axis (without the dx factor).
    pub fn trapezoid_weights(&self, axis: usize) -> Vec<f64> {
        let mut w = vec![1.0; self.m[axis]];
        w[0] = 0.5;
        *w.last_mut().unwrap() = 0.5;
        w
    }

    /// Volume element Π dxᵢ.
    pub fn cell_volume(&self) -> f64 {
        self.dx.iter().product()
    }
}

/// Nodal values of a density on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite field value at node {i}")));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let len = grid.len();
        Field { grid, values: vec![0.0; len] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Field { grid, values }
    }

    /// Isotropic Gaussian of total (continuous) mass `mass`.
    pub fn gaussian(grid: Grid, mass: f64, center: &[f64], std: f64) -> Self {
        let n = grid.n() as i32;
        let norm = mass / (2.0 * std::f64::consts::PI * std * std).powf(n as f64 / 2.0);
        let c = center.to_vec();
        Field::from_fn(grid, move |z| {
            let r2: f64 = z.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
            norm * (-r2 / (2.0 * std * std)).exp()
        })
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Multilinear interpolation at an arbitrary point; zero outside the box.
    pub fn interpolate(&self, z: &[f64]) -> f64 {
        let g = &self.grid;
        let mut base = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for a in 0..g.n() {
            let s = (z[a] - g.lo()[a]) / g.dx()[a];
            if !(s >= 0.0) || s > (g.m()[a] - 1) as f64 {
                return 0.0;
            }
            let k = (s.floor() as usize).min(g.m()[a] - 2);
            base[a] = k;
            frac[a] = s - k as f64;
        }
        if g.n() == 1 {
            let k = base[0];
            (1.0 - frac[0]) * self.values[k] + frac[0] * self.values[k + 1]
        } else {
            let m1 = g.m()[1];
            let at = |i: usize, j: usize| self.values[i * m1 + j];
            let (i, j) = (base[0], base[1]);
            let (s, t) = (frac[0], frac[1]);
            (1.0 - s) * ((1.0 - t) * at(i, j) + t * at(i, j + 1))
                + s * ((1.0 - t) * at(i + 1, j) + t * at(i + 1, j + 1))
        }
    }
}

/// Zeroth and first moments of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mass: f64,
    /// ∫ zᵢ f dz per axis (not normalized).
    pub first: Vec<f64>,
}

impl Moments {
    /// Mean position, or a degenerate-mass error when the mass is not positive.
    pub fn mean(&self, field: &'static str) -> Result<Vec<f64>> {
        if !(self.mass > 0.0) {
            return Err(Error::DegenerateMass { field, mass: self.mass });
        }
        Ok(self.first.iter().map(|m| m / self.mass).collect())
    }
}

/// Trapezoid mass and first moments of raw nodal values on `grid`.
///
/// Each row is reduced sequentially; row partials are combined by pairwise
/// summation in row order, so the result is independent of threading.
pub fn moments_of(grid: &Grid, values: &[f64]) -> Moments {
    let vol = grid.cell_volume();
    if grid.n() == 1 {
        let w = grid.trapezoid_weights(0);
        let m: Vec<f64> = values.iter().zip(&w).map(|(v, w)| v * w).collect();
        let x: Vec<f64> = m.iter().enumerate().map(|(k, v)| v * grid.coord(0, k)).collect();
        return Moments { mass: par::pairwise_sum(&m) * vol, first: vec![par::pairwise_sum(&x) * vol] };
    }
    let (m0, m1) = (grid.m()[0], grid.m()[1]);
    let w0 = grid.trapezoid_weights(0);
    let w1 = grid.trapezoid_weights(1);
    let y1 = grid.coords(1);
    let rows: Vec<(f64, f64)> = par::map_indexed(m0, |i| {
        let row = &values[i * m1..(i + 1) * m1];
        let mut s = 0.0;
        let mut sy = 0.0;
        for j in 0..m1 {
            let v = row[j] * w1[j];
            s += v;
            sy += v * y1[j];
        }
        (s, sy)
    });
    let mass_rows: Vec<f64> = rows.iter().zip(&w0).map(|(r, w)| r.0 * w).collect();
    let x_rows: Vec<f64> =
        rows.iter().zip(&w0).enumerate().map(|(i, (r, w))| r.0 * w * grid.coord(0, i)).collect();
    let y_rows: Vec<f64> = rows.iter().zip(&w0).map(|(r, w)| r.1 * w).collect();
    Moments {
        mass: par::pairwise_sum(&mass_rows) * vol,
        first: vec![par::pairwise_sum(&x_rows) * vol, par::pairwise_sum(&y_rows) * vol],
    }
}

/// Trapezoid integral of the field over the box.
pub fn quadrature_mass(f: &Field) -> f64 {
    moments_of(&f.grid, &f.values).mass
}

/// Mass-normalized first moment.
pub fn quadrature_mean(f: &Field) -> Result<Vec<f64>> {
    moments_of(&f.grid, &f.values).mean("field")
}

/// Trapezoid integral of |f|.
pub fn l1_norm(f: &Field) -> f64 {
    let abs: Vec<f64> = f.values.iter().map(|v| v.abs()).collect();
    moments_of(&f.grid, &abs).mass
}

/// Writes the second-order central-difference Laplacian of `values` into
/// `out`, treating nodes outside the box as zero.
pub fn laplacian_into(grid: &Grid, values: &[f64], out: &mut [f64]) {
    if grid.n() == 1 {
        let m = grid.m()[0];
        let c = 1.0 / (grid.dx()[0] * grid.dx()[0]);
        for k in 0..m {
            let l = if k > 0 { values[k - 1] } else { 0.0 };
            let r = if k + 1 < m { values[k + 1] } else { 0.0 };
            out[k] = c * (l - 2.0 * values[k] + r);
        }
        return;
    }
    let (m0, m1) = (grid.m()[0], grid.m()[1]);
    let c0 = 1.0 / (grid.dx()[0] * grid.dx()[0]);
    let c1 = 1.0 / (grid.dx()[1] * grid.dx()[1]);
    par::for_each_row(out, m1, |i, row| {
        let cur = &values[i * m1..(i + 1) * m1];
        let up = if i > 0 { Some(&values[(i - 1) * m1..i * m1]) } else { None };
        let dn = if i + 1 < m0 { Some(&values[(i + 1) * m1..(i + 2) * m1]) } else { None };
        for j in 0..m1 {
            let u = up.map_or(0.0, |r| r[j]);
            let d = dn.map_or(0.0, |r| r[j]);
            let l = if j > 0 { cur[j - 1] } else { 0.0 };
            let r = if j + 1 < m1 { cur[j + 1] } else { 0.0 };
            row[j] = c0 * (u - 2.0 * cur[j] + d) + c1 * (l - 2.0 * cur[j] + r);
        }
    });
}

pub fn laplacian(f: &Field) -> Field {
    let mut out = vec![0.0; f.values.len()];
    laplacian_into(&f.grid, &f.values, &mut out);
    Field { grid: f.grid.clone(), values: out }
}

/// Fourth-order central-difference Laplacian with two layers of zero ghosts.
/// Used as an independent plug-back check of second-order solutions.
pub fn laplacian4(f: &Field) -> Field {
    let g = &f.grid;
    let mut out = vec![0.0; f.values.len()];
    let get = |a: &[i64; 2]| -> f64 {
        for ax in 0..g.n() {
            if a[ax] < 0 || a[ax] >= g.m()[ax] as i64 {
                return 0.0;
            }
        }
        let idx = if g.n() == 1 { a[0] as usize } else { a[0] as usize * g.m()[1] + a[1] as usize };
        f.values[idx]
    };
    for (idx, o) in out.iter_mut().enumerate() {
        let k = g.unflatten(idx);
        let base = [k[0] as i64, k[1] as i64];
        let mut s = 0.0;
        for ax in 0..g.n() {
            let c = 1.0 / (12.0 * g.dx()[ax] * g.dx()[ax]);
            let at = |d: i64| {
                let mut p = base;
                p[ax] += d;
                get(&p)
            };
            s += c * (-at(-2) + 16.0 * at(-1) - 30.0 * at(0) + 16.0 * at(1) - at(2));
        }
        *o = s;
    }
    Field { grid: g.clone(), values: out }
}
