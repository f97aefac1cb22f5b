//! Harmonic-oscillator eigenbasis in physicists' Hermite convention.
//!
//! The basis functions are
//! Γ_k(z) = C_k exp(−β‖z‖²/(2μ)) Πᵢ H_{kᵢ}(√(β/μ) zᵢ) with
//! C_k = (β/(πμ))^{n/4} (2^{σ(k)} Πᵢ kᵢ!)^{−1/2}; they are orthonormal in L²
//! and satisfy −μ²ΔΓ_k + β²‖z‖²Γ_k = (2σ(k)+n)μβ Γ_k.
//!
//! Everything that carries large factorials is evaluated either through the
//! normalized three-term recurrence or in log domain.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::special::{ln_factorial, CompensatedSum, LnFactorials};

/// Physicists' Hermite polynomial H_k(x) by forward recurrence.
pub fn hermite(k: usize, x: f64) -> f64 {
    let mut h0 = 1.0;
    if k == 0 {
        return h0;
    }
    let mut h1 = 2.0 * x;
    for j in 1..k {
        let h2 = 2.0 * x * h1 - 2.0 * j as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// H_k(x) e^{−x²/2} / √(2^k k!), evaluated without overflow.
pub fn hermite_function(k: usize, x: f64) -> f64 {
    let mut a = (-0.5 * x * x).exp();
    if k == 0 {
        return a;
    }
    let mut b = std::f64::consts::SQRT_2 * x * a;
    for j in 1..k {
        let jf = j as f64;
        let c = (2.0 / (jf + 1.0)).sqrt() * x * b - (jf / (jf + 1.0)).sqrt() * a;
        a = b;
        b = c;
    }
    b
}

/// [`hermite_function`] for all degrees 0..=kmax at once.
pub fn hermite_functions(kmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    out.push((-0.5 * x * x).exp());
    if kmax >= 1 {
        out.push(std::f64::consts::SQRT_2 * x * out[0]);
    }
    for j in 1..kmax {
        let jf = j as f64;
        let c = (2.0 / (jf + 1.0)).sqrt() * x * out[j] - (jf / (jf + 1.0)).sqrt() * out[j - 1];
        out.push(c);
    }
    out
}

/// Multi-index k = (k₁, …, kₙ).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(k: &[usize]) -> Self {
        MultiIndex(k.to_vec())
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The unit index e_i.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut k = vec![0; n];
        k[i] = 1;
        MultiIndex(k)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn sigma(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    pub fn all_even(&self) -> bool {
        self.0.iter().all(|k| k % 2 == 0)
    }

    /// kᵢ odd and every other component even.
    pub fn in_parity_class(&self, i: usize) -> bool {
        self.0.iter().enumerate().all(|(j, &k)| if j == i { k % 2 == 1 } else { k % 2 == 0 })
    }

    /// Copy with component `i` replaced.
    pub fn with(&self, i: usize, v: usize) -> Self {
        let mut k = self.0.clone();
        k[i] = v;
        MultiIndex(k)
    }

    /// Componentwise 2k.
    pub fn doubled(&self) -> Self {
        MultiIndex(self.0.iter().map(|k| 2 * k).collect())
    }

    /// All indices in dimension `n` with σ ≤ `smax`, ordered by σ then
    /// lexicographically.
    pub fn all_up_to(n: usize, smax: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for s in 0..=smax {
            if n == 1 {
                out.push(MultiIndex(vec![s]));
            } else {
                for a in (0..=s).rev() {
                    let mut rest = vec![0; n - 1];
                    fill_compositions(s - a, &mut rest, 0, &mut |r| {
                        let mut k = vec![a];
                        k.extend_from_slice(r);
                        out.push(MultiIndex(k));
                    });
                }
            }
        }
        out
    }
}

fn fill_compositions(s: usize, buf: &mut [usize], pos: usize, f: &mut impl FnMut(&[usize])) {
    if pos == buf.len() - 1 {
        buf[pos] = s;
        f(buf);
        return;
    }
    for a in (0..=s).rev() {
        buf[pos] = a;
        fill_compositions(s - a, buf, pos + 1, f);
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Spectral parameters of the basis: μ (not squared), β, and n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermiteContext {
    mu: f64,
    beta: f64,
    n: usize,
}

impl HermiteContext {
    pub fn new(mu: f64, beta: f64, n: usize) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("need mu > 0 and beta > 0, got {mu}, {beta}")));
        }
        if n == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        Ok(HermiteContext { mu, beta, n })
    }

    /// Host basis of a model: μ = μ_H, β = β.
    pub fn from_params(p: &ModelParams) -> Result<Self> {
        HermiteContext::new(p.mu_h(), p.beta(), p.n())
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn n(&self) -> usize {
        self.n
    }

    /// Scale √(β/μ) mapping z to the Hermite argument.
    pub fn scale(&self) -> f64 {
        (self.beta / self.mu).sqrt()
    }

    fn check(&self, k: &MultiIndex) {
        assert_eq!(k.n(), self.n, "multi-index dimension does not match context");
    }
}

/// ln C_k.
pub fn log_norm_const(k: &MultiIndex, ctx: &HermiteContext) -> f64 {
    let n = ctx.n as f64;
    let fact: f64 = k.as_slice().iter().map(|&ki| ln_factorial(ki)).sum();
    0.25 * n * (ctx.beta / (PI * ctx.mu)).ln() - 0.5 * (k.sigma() as f64 * 2f64.ln() + fact)
}

/// Γ_k(z).
pub fn gamma_k(k: &MultiIndex, z: &[f64], ctx: &HermiteContext) -> f64 {
    ctx.check(k);
    let s = ctx.scale();
    let n = ctx.n as f64;
    let pref = (ctx.beta / (PI * ctx.mu)).powf(0.25 * n);
    let mut v = pref;
    for (i, &ki) in k.as_slice().iter().enumerate() {
        v *= hermite_function(ki, s * z[i]);
    }
    v
}

/// λ_k = (2σ(k) + n) μ β.
pub fn eigenvalue(k: &MultiIndex, ctx: &HermiteContext) -> f64 {
    ctx.check(k);
    (2 * k.sigma() + ctx.n) as f64 * ctx.mu * ctx.beta
}

/// ∂Γ_k/∂zᵢ by the ladder relation.
pub fn gamma_k_derivative(i: usize, k: &MultiIndex, z: &[f64], ctx: &HermiteContext) -> f64 {
    ctx.check(k);
    let ki = k.get(i);
    let up = gamma_k(&k.with(i, ki + 1), z, ctx) * ((ki + 1) as f64 / 2.0).sqrt();
    let down = if ki > 0 { gamma_k(&k.with(i, ki - 1), z, ctx) * (ki as f64 / 2.0).sqrt() } else { 0.0 };
    ctx.scale() * (down - up)
}

/// ∫ Γ_k.
pub fn moment_mk(k: &MultiIndex, ctx: &HermiteContext) -> f64 {
    ctx.check(k);
    if !k.all_even() {
        return 0.0;
    }
    let n = ctx.n as f64;
    let s = k.sigma() as f64;
    let mut ln = 0.25 * n * (PI * ctx.mu / ctx.beta).ln() + 0.5 * (n - s) * 2f64.ln();
    for &ki in k.as_slice() {
        ln += 0.5 * ln_factorial(ki) - ln_factorial(ki / 2);
    }
    ln.exp()
}

/// ∫ zᵢ Γ_k; nonzero only when kᵢ is odd and every other component even.
pub fn first_moment_wik(i: usize, k: &MultiIndex, ctx: &HermiteContext) -> f64 {
    ctx.check(k);
    if !k.in_parity_class(i) {
        return 0.0;
    }
    let n = ctx.n as f64;
    let s = k.sigma() as f64;
    let mut ln = 2f64.ln()
        + 0.5 * (ctx.mu / ctx.beta).ln()
        + 0.25 * n * (PI * ctx.mu / ctx.beta).ln()
        + 0.5 * (n - s) * 2f64.ln();
    for (j, &kj) in k.as_slice().iter().enumerate() {
        ln += 0.5 * ln_factorial(kj);
        ln -= if j == i { ln_factorial((kj - 1) / 2) } else { ln_factorial(kj / 2) };
    }
    ln.exp()
}

/// ∫ zᵢ Γ_k exp(−β‖z‖²/(2μ)); nonzero only for k = eᵢ.
pub fn gaussian_overlap_first(i: usize, k: &MultiIndex, ctx: &HermiteContext) -> f64 {
    ctx.check(k);
    if *k != MultiIndex::unit(ctx.n, i) {
        return 0.0;
    }
    let n = ctx.n as f64;
    (ctx.mu / (2.0 * ctx.beta)).sqrt() * (ctx.mu * PI / ctx.beta).powf(0.25 * n)
}

/// ∫ Γ_{2k} exp(−θ‖z‖²) for θ > 0.
pub fn gaussian_overlap_even(k: &MultiIndex, theta: f64, ctx: &HermiteContext) -> Result<f64> {
    ctx.check(k);
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta must be > 0, got {theta}")));
    }
    let (mu, beta) = (ctx.mu, ctx.beta);
    let n = ctx.n as f64;
    let ratio = (beta - 2.0 * theta * mu) / (beta + 2.0 * theta * mu);
    if ratio == 0.0 && !k.is_zero() {
        return Ok(0.0);
    }
    let mut ln = log_norm_const(&k.doubled(), ctx) + 0.5 * n * (2.0 * PI * mu / (beta + 2.0 * theta * mu)).ln();
    let mut sign = 1.0;
    for &ki in k.as_slice() {
        if ki > 0 {
            ln += ki as f64 * ratio.abs().ln();
            if ratio < 0.0 && ki % 2 == 1 {
                sign = -sign;
            }
        }
        ln += ln_factorial(2 * ki) - ln_factorial(ki);
    }
    Ok(sign * ln.exp())
}

/// ∫ H_j(y) H_k(y) exp(−y² − θ(y − κ)²) dy in closed form.
pub fn hermite_gauss_product(j: usize, k: usize, theta: f64, kappa: f64) -> f64 {
    let scaled = hermite_gauss_product_scaled(j, k, theta, kappa);
    let ln_norm = 0.5 * ((j + k) as f64 * 2f64.ln() + ln_factorial(j) + ln_factorial(k));
    scaled * ln_norm.exp()
}

/// [`hermite_gauss_product`] divided by √(2^j j! 2^k k!).
///
/// In this normalization every term of the l-sum is a product of bounded
/// Hermite functions, so large degrees do not overflow.
pub fn hermite_gauss_product_scaled(j: usize, k: usize, theta: f64, kappa: f64) -> f64 {
    assert!(theta > 0.0, "theta must be positive");
    let (j, k) = if j >= k { (j, k) } else { (k, j) };
    let lam = (theta / (1.0 + theta)).sqrt();
    let s = lam * kappa;
    if kappa == 0.0 && (j + k) % 2 == 1 {
        return 0.0;
    }
    let hf = hermite_functions(j, s);
    let lf = LnFactorials::new(j);
    hgp_scaled_with(j, k, theta, lam, &hf, &lf)
}

/// Inner sum of the scaled product, with precomputed Hermite functions at
/// s = λκ and a factorial table covering j.
pub(crate) fn hgp_scaled_with(
    j: usize,
    k: usize,
    theta: f64,
    lam: f64,
    hf: &[f64],
    lf: &LnFactorials,
) -> f64 {
    let (j, k) = if j >= k { (j, k) } else { (k, j) };
    let ln_theta = theta.ln();
    let ln_pref = 0.5 * (PI / (1.0 + theta)).ln() + (j + k) as f64 * lam.ln();
    let mut acc = CompensatedSum::new();
    for l in 0..=k {
        let a = hf[j - l] * hf[k - l];
        if a == 0.0 {
            continue;
        }
        let ln_w = ln_pref + 0.5 * (lf.ln_binomial(j, l) + lf.ln_binomial(k, l)) - l as f64 * ln_theta;
        acc.add(a * ln_w.exp());
    }
    acc.value()
}

/// Right-hand side of the scale-and-shift expansion
/// H_k(γ(x+y)) = Σⱼ C(k,j) γʲ (1−γ²)^{(k−j)/2} H_{k−j}(yγ/√(1−γ²)) H_j(x).
pub fn hermite_scale_shift(k: usize, gamma: f64, x: f64, y: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let c = (1.0 - gamma * gamma).sqrt();
    let arg = y * gamma / c;
    let mut acc = CompensatedSum::new();
    let mut binom = 1.0;
    for j in 0..=k {
        if j > 0 {
            binom *= (k - j + 1) as f64 / j as f64;
        }
        acc.add(binom * gamma.powi(j as i32) * c.powi((k - j) as i32) * hermite(k - j, arg) * hermite(j, x));
    }
    Ok(acc.value())
}
