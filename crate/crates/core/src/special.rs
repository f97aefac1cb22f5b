//! Log-domain factorials and compensated summation.

use statrs::function::factorial;

pub fn ln_factorial(k: usize) -> f64 {
    factorial::ln_factorial(k as u64)
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    factorial::ln_binomial(n as u64, k as u64)
}

/// Table of ln k! for k ≤ kmax, for tight inner loops.
#[derive(Debug, Clone)]
pub struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub fn new(kmax: usize) -> Self {
        LnFactorials((0..=kmax).map(ln_factorial).collect())
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    #[inline]
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        self.0[n] - self.0[k] - self.0[n - k]
    }

    pub fn max(&self) -> usize {
        self.0.len() - 1
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// ln(Σ exp(xᵢ)) evaluated stably; −∞ for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let mut s = CompensatedSum::new();
    for x in xs {
        s.add((x - m).exp());
    }
    m + s.value().ln()
}
