//! Classical fourth-order Runge-Kutta on flat state vectors.

use crate::error::Result;
use crate::par;

/// Reusable RK4 workspace for states of a fixed length.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Rk4 {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.tmp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tmp.is_empty()
    }

    /// Advances `y` by one step of size `dt`. `f(y, dy)` writes the
    /// derivative of `y` into `dy`; it is called at all four stages.
    pub fn step<F>(&mut self, y: &mut [f64], dt: f64, mut f: F) -> Result<()>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        assert_eq!(y.len(), self.tmp.len(), "state length mismatch");
        f(y, &mut self.k1)?;
        par::axpy_into(&mut self.tmp, y, 0.5 * dt, &self.k1);
        f(&self.tmp, &mut self.k2)?;
        par::axpy_into(&mut self.tmp, y, 0.5 * dt, &self.k2);
        f(&self.tmp, &mut self.k3)?;
        par::axpy_into(&mut self.tmp, y, dt, &self.k3);
        f(&self.tmp, &mut self.k4)?;
        let w = dt / 6.0;
        for i in 0..y.len() {
            y[i] += w * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let run = |steps: usize| {
            let mut y = [1.0];
            let mut rk = Rk4::new(1);
            let dt = 1.0 / steps as f64;
            for _ in 0..steps {
                rk.step(&mut y, dt, |y, d| {
                    d[0] = -y[0];
                    Ok(())
                })
                .unwrap();
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let ratio = run(10) / run(20);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }
}
