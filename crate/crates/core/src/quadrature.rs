//! Quadrature rules that do not rely on any closed form from this crate:
//! Gauss-Hermite rules for e^{−x²}-weighted integrals and an adaptive
//! trapezoid rule for smooth, rapidly decaying integrands on ℝ.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::special::CompensatedSum;

/// Nodes and weights of the N-point Gauss-Hermite rule (weight e^{−x²}).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub-Welsch eigenvalues of the Jacobi matrix as starting nodes,
    /// polished by Newton on the orthonormal recurrence; nodes ascending.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("rule needs at least one node".into()));
        }
        let jac = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut guesses: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
        guesses.sort_by(f64::total_cmp);
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let nf = n as f64;
        let mut x = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for (i, &g) in guesses.iter().enumerate() {
            let mut z = g;
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..50 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged || (z - g).abs() > 1e-6 * g.abs().max(1.0) {
                return Err(Error::Numeric(format!("Gauss-Hermite node {i} of {n} did not converge")));
            }
            x.push(z);
            w.push(2.0 / (pp * pp));
        }
        Ok(GaussHermite { nodes: x, weights: w })
    }

    /// ∫ f(x) e^{−x²} dx.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut s = CompensatedSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s.add(w * f(*x));
        }
        s.value()
    }

    /// ∫∫ f(x, y) e^{−x²−y²} dx dy by the tensor rule.
    pub fn integrate2(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut s = CompensatedSum::new();
        for (x, wx) in self.nodes.iter().zip(&self.weights) {
            for (y, wy) in self.nodes.iter().zip(&self.weights) {
                s.add(wx * wy * f(*x, *y));
            }
        }
        s.value()
    }
}

/// Half-width L beyond which |f| stays below `1e-16 · peak` on a probe grid.
pub fn tail_extent(f: &impl Fn(f64) -> f64) -> f64 {
    let mut peak = 0.0f64;
    for i in -400..=400 {
        peak = peak.max(f(i as f64 * 0.05).abs());
    }
    let mut l = 2.0f64;
    loop {
        let tail = (0..=20)
            .map(|i| l + i as f64 * 0.05 * l)
            .map(|x| f(x).abs().max(f(-x).abs()))
            .fold(0.0, f64::max);
        if tail <= 1e-16 * peak.max(f64::MIN_POSITIVE) || l > 1e3 {
            return l * 2.0;
        }
        l *= 1.25;
    }
}

/// ∫ f over ℝ by trapezoid sums on [−L, L] with repeated step halving until
/// two successive levels agree to `rel_tol` (relative to the integral of |f|).
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, rel_tol: f64) -> Result<f64> {
    let l = tail_extent(&f);
    integrate_trapezoid(&f, -l, l, rel_tol)
}

/// Adaptive trapezoid on a fixed finite interval.
pub fn integrate_trapezoid(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let mut n = 64usize;
    let mut h = (b - a) / n as f64;
    let mut sum = CompensatedSum::new();
    let mut abs = CompensatedSum::new();
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let v = f(a + i as f64 * h);
        sum.add(w * v);
        abs.add(w * v.abs());
    }
    let mut prev = sum.value() * h;
    for _ in 0..16 {
        // Add midpoints of the current level.
        for i in 0..n {
            let v = f(a + (i as f64 + 0.5) * h);
            sum.add(v);
            abs.add(v.abs());
        }
        n *= 2;
        h *= 0.5;
        let cur = sum.value() * h;
        let scale = abs.value() * h;
        if (cur - prev).abs() <= rel_tol * scale.max(f64::MIN_POSITIVE) && n >= 512 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Numeric("adaptive trapezoid did not converge".into()))
}

/// ∫∫ over ℝ² as nested adaptive 1D integrals.
pub fn integrate_adaptive2(f: impl Fn(f64, f64) -> f64, rel_tol: f64) -> Result<f64> {
    let inner = |x: f64| integrate_adaptive(|y| f(x, y), rel_tol).unwrap_or(f64::NAN);
    let v = integrate_adaptive(inner, rel_tol)?;
    if v.is_nan() {
        return Err(Error::Numeric("inner adaptive integral failed".into()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_hermite_moments() {
        let gh = GaussHermite::new(40).unwrap();
        assert!((gh.integrate(|_| 1.0) - PI.sqrt()).abs() < 1e-13);
        assert!((gh.integrate(|x| x * x) - PI.sqrt() / 2.0).abs() < 1e-13);
        assert!(gh.integrate(|x| x.powi(3)).abs() < 1e-13);
        let mut sorted = gh.nodes.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, gh.nodes);
    }

    #[test]
    fn large_rule_converges() {
        let gh = GaussHermite::new(200).unwrap();
        assert!((gh.integrate(|x| x.powi(8)) - 105.0 * PI.sqrt() / 16.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_gaussian() {
        let v = integrate_adaptive(|x| (-3.0 * (x - 0.4) * (x - 0.4)).exp(), 1e-13).unwrap();
        assert!((v - (PI / 3.0).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn adaptive_2d_gaussian() {
        let v = integrate_adaptive2(|x, y| (-(x * x + 2.0 * y * y)).exp(), 1e-12).unwrap();
        assert!((v - PI / 2f64.sqrt()).abs() < 1e-11);
    }
}
