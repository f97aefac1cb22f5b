//! Principal eigenpairs of symmetric grid operators.
//!
//! A single-vector LOBPCG iteration, preconditioned by the exact inverse of
//! a separable approximation (1D eigendecompositions per axis, applied by
//! fast diagonalization).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Converged eigenpair; `vector` has unit Euclidean norm.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    crate::par::pairwise_sum(&p)
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Smallest eigenpair of the symmetric operator `apply` by LOBPCG.
///
/// `precond` must be symmetric positive definite. Convergence is declared
/// when ‖Kx − ρx‖ ≤ `tol` for the unit vector x.
pub fn lobpcg_smallest<A, T>(apply: A, precond: T, x0: &[f64], tol: f64, max_iter: usize) -> Result<EigenPair>
where
    A: Fn(&[f64], &mut [f64]),
    T: Fn(&[f64], &mut [f64]),
{
    let len = x0.len();
    let nx = norm(x0);
    if !(nx > 0.0) {
        return Err(Error::Numeric("LOBPCG needs a nonzero start vector".into()));
    }
    let mut x: Vec<f64> = x0.iter().map(|v| v / nx).collect();
    let mut kx = vec![0.0; len];
    apply(&x, &mut kx);
    let mut rho = dot(&x, &kx);
    let mut p: Option<Vec<f64>> = None;
    let mut r = vec![0.0; len];
    let mut w = vec![0.0; len];
    for it in 0..max_iter {
        for i in 0..len {
            r[i] = kx[i] - rho * x[i];
        }
        let rn = norm(&r);
        if rn <= tol {
            return Ok(EigenPair { value: rho, vector: x, iterations: it, residual: rn });
        }
        precond(&r, &mut w);

        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut cands = vec![w.clone()];
        if let Some(pp) = &p {
            cands.push(pp.clone());
        }
        for mut v in cands {
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &v);
                    for i in 0..len {
                        v[i] -= c * b[i];
                    }
                }
            }
            let nv = norm(&v);
            if nv > 1e-13 {
                v.iter_mut().for_each(|e| *e /= nv);
                basis.push(v);
            }
        }
        let kb: Vec<Vec<f64>> = basis
            .iter()
            .map(|b| {
                let mut o = vec![0.0; len];
                apply(b, &mut o);
                o
            })
            .collect();
        let d = basis.len();
        let g = DMatrix::from_fn(d, d, |i, j| 0.5 * (dot(&basis[i], &kb[j]) + dot(&basis[j], &kb[i])));
        let eig = SymmetricEigen::new(g);
        let imin = eig.eigenvalues.imin();
        let y: DVector<f64> = eig.eigenvectors.column(imin).into_owned();
        let mut xn = vec![0.0; len];
        let mut kxn = vec![0.0; len];
        let mut pn = vec![0.0; len];
        for k in 0..d {
            let c = y[k];
            for i in 0..len {
                xn[i] += c * basis[k][i];
                kxn[i] += c * kb[k][i];
                if k > 0 {
                    pn[i] += c * basis[k][i];
                }
            }
        }
        let nn = norm(&xn);
        xn.iter_mut().for_each(|e| *e /= nn);
        kxn.iter_mut().for_each(|e| *e /= nn);
        x = xn;
        kx = kxn;
        rho = dot(&x, &kx);
        p = if d > 1 { Some(pn) } else { None };
    }
    Err(Error::Numeric(format!("LOBPCG did not converge in {max_iter} iterations")))
}

/// Exact inverse of `s − Σ_a (μ² D₂ − a² x_a²)` on a grid with Dirichlet
/// ends, where D₂ is the three-point second difference.
#[derive(Debug, Clone)]
pub struct SeparableInverse {
    q: Vec<DMatrix<f64>>,
    lam: Vec<Vec<f64>>,
    shift: f64,
    m: Vec<usize>,
}

impl SeparableInverse {
    /// Eigendecomposes the 1D factors; `shift` must exceed the largest
    /// eigenvalue of the separable operator (checked).
    pub fn new(grid: &Grid, mu2: f64, a2: f64, shift: f64) -> Result<Self> {
        let (q, lam) = Self::factors(grid, mu2, a2);
        let top: f64 = lam.iter().map(|l| l.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum();
        if !(shift > top) {
            return Err(Error::Numeric(format!("preconditioner shift {shift} not above spectrum top {top}")));
        }
        Ok(SeparableInverse { q, lam, shift, m: grid.m().to_vec() })
    }

    /// Per-axis eigenvectors and eigenvalues of μ²D₂ − a²x².
    pub fn factors(grid: &Grid, mu2: f64, a2: f64) -> (Vec<DMatrix<f64>>, Vec<Vec<f64>>) {
        let mut q = vec![];
        let mut lam = vec![];
        for ax in 0..grid.n() {
            let m = grid.m()[ax];
            let c = mu2 / (grid.dx()[ax] * grid.dx()[ax]);
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    let x = grid.coord(ax, i);
                    -2.0 * c - a2 * x * x
                } else if i.abs_diff(j) == 1 {
                    c
                } else {
                    0.0
                }
            });
            let e = SymmetricEigen::new(t);
            lam.push(e.eigenvalues.iter().copied().collect());
            q.push(e.eigenvectors);
        }
        (q, lam)
    }

    /// Largest eigenvalue of the separable operator (sum of axis maxima).
    pub fn top(&self) -> f64 {
        self.lam.iter().map(|l| l.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum()
    }

    /// Writes `(shift − A_sep)⁻¹ r` into `out`.
    pub fn apply(&self, r: &[f64], out: &mut [f64]) {
        if self.m.len() == 1 {
            let q = &self.q[0];
            let v = DVector::from_column_slice(r);
            let mut y = q.transpose() * v;
            for (i, yi) in y.iter_mut().enumerate() {
                *yi /= self.shift - self.lam[0][i];
            }
            let x = q * y;
            out.copy_from_slice(x.as_slice());
            return;
        }
        let (m0, m1) = (self.m[0], self.m[1]);
        // Row-major values are the column-major storage of the transpose.
        let xt = DMatrix::from_column_slice(m1, m0, r);
        let yt = self.q[1].transpose() * xt * &self.q[0];
        let mut yt = yt;
        for i in 0..m0 {
            for j in 0..m1 {
                yt[(j, i)] /= self.shift - self.lam[0][i] - self.lam[1][j];
            }
        }
        let res = &self.q[1] * yt * self.q[0].transpose();
        out.copy_from_slice(res.as_slice());
    }
}
