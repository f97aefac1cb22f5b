//! Linearization of the pursuit problem around the unperturbed host pulse.
//!
//! Everything lives in the Hermite basis Γ_k of the host (μ = μ_H, β) and in
//! the frame where the pursuit direction is e₁; the scalar outputs (c, η) do
//! not depend on that choice. Coefficient maps are sparse and iterate in a
//! fixed order, so every sum is reproducible bit for bit.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{first_moment_wik, gamma_k, hermite_functions, hgp_scaled_with, moment_mk, HermiteContext, MultiIndex};
use crate::model::ModelParams;
use crate::special::{ln_factorial, CompensatedSum, LnFactorials};
use crate::tolerances::{theta_bar_limit, SERIES_TAIL_TOL};

/// Sparse Hermite coefficients k ↦ v.
///
/// `truncated` marks a map that cuts off an infinite sequence; sums over such
/// a map are checked for a negligible tail, while finitely supported maps are
/// summed exactly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "CoefficientDump", try_from = "CoefficientDump")]
pub struct CoefficientMap {
    entries: BTreeMap<MultiIndex, f64>,
    truncated: bool,
}

#[derive(Serialize, Deserialize)]
struct CoefficientDump {
    truncated: bool,
    entries: Vec<(Vec<usize>, f64)>,
}

impl From<CoefficientMap> for CoefficientDump {
    fn from(m: CoefficientMap) -> Self {
        CoefficientDump {
            truncated: m.truncated,
            entries: m.entries.into_iter().map(|(k, v)| (k.as_slice().to_vec(), v)).collect(),
        }
    }
}

impl TryFrom<CoefficientDump> for CoefficientMap {
    type Error = Error;
    fn try_from(d: CoefficientDump) -> Result<Self> {
        let mut m = CoefficientMap { entries: BTreeMap::new(), truncated: d.truncated };
        for (k, v) in d.entries {
            m.insert(MultiIndex::new(&k), v)?;
        }
        Ok(m)
    }
}

impl CoefficientMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// An empty map flagged as the truncation of an infinite sequence.
    pub fn truncated() -> Self {
        CoefficientMap { entries: BTreeMap::new(), truncated: true }
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// Inserts a value; all keys must share one dimension.
    pub fn insert(&mut self, k: MultiIndex, v: f64) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::Domain(format!("coefficient at {k} is not finite")));
        }
        if let Some(n) = self.dim() {
            if n != k.n() {
                return Err(Error::Domain(format!("index {k} does not have dimension {n}")));
            }
        }
        if v == 0.0 {
            self.entries.remove(&k);
        } else {
            self.entries.insert(k, v);
        }
        Ok(())
    }

    pub fn get(&self, k: &MultiIndex) -> f64 {
        self.entries.get(k).copied().unwrap_or(0.0)
    }

    pub fn dim(&self) -> Option<usize> {
        self.entries.keys().next().map(|k| k.n())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn max_sigma(&self) -> usize {
        self.entries.keys().map(|k| k.sigma()).max().unwrap_or(0)
    }

    /// Largest |a_k − b_k| over the union of supports.
    pub fn max_abs_diff(&self, other: &CoefficientMap) -> f64 {
        let mut d: f64 = 0.0;
        for (k, v) in self.iter() {
            d = d.max((v - other.get(k)).abs());
        }
        for (k, v) in other.iter() {
            if !self.entries.contains_key(k) {
                d = d.max(v.abs());
            }
        }
        d
    }

    /// Σ a_k Γ_k(z).
    pub fn evaluate(&self, z: &[f64], ctx: &HermiteContext) -> f64 {
        let mut s = CompensatedSum::new();
        for (k, v) in self.iter() {
            s.add(v * gamma_k(k, z, ctx));
        }
        s.value()
    }
}

/// Estimated remainder of a series whose contributions are grouped by shell
/// σ(k): geometric extrapolation of the last nonzero shells.
fn shell_tail(shells: &[f64]) -> f64 {
    let a: Vec<f64> = shells.iter().map(|s| s.abs()).filter(|s| *s > 0.0).collect();
    match a.len() {
        0 => 0.0,
        1 | 2 => a[a.len() - 1],
        len => {
            let q = (a[len - 1] / a[len - 2]).max(a[len - 2] / a[len - 3]);
            if q >= 1.0 {
                f64::INFINITY
            } else {
                a[len - 1] * q / (1.0 - q)
            }
        }
    }
}

fn check_tail(name: &str, shells: &[f64], total: f64, truncated: bool) -> Result<f64> {
    if !truncated {
        return Ok(0.0);
    }
    let tail = shell_tail(shells);
    if !(tail <= SERIES_TAIL_TOL * total.abs().max(1.0)) {
        return Err(Error::SeriesDivergence(format!(
            "{name}: estimated tail {tail:e} exceeds tolerance for sum {total:e}"
        )));
    }
    Ok(tail)
}

/// The linearized operator 𝓛(c, φ, η) = (R, ∫φ, ∫z₁φ) at ε = 0.
#[derive(Debug, Clone, Copy)]
pub struct Linearized {
    ctx: HermiteContext,
    gamma_h: f64,
}

/// Output of the inverse: the unique antecedent of (f, h, r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedSolution {
    pub c: f64,
    pub phi: CoefficientMap,
    pub eta: f64,
    /// Tail estimates of the two infinite series (zero for finite inputs).
    pub tail_phi0: f64,
    pub tail_c: f64,
}

impl Linearized {
    /// Requires β > 0 and R_H > nμ_Hβ (the unperturbed pulse must exist).
    pub fn new(p: &ModelParams) -> Result<Self> {
        let ctx = HermiteContext::from_params(p)?;
        if !(p.r_h() > p.n() as f64 * p.mu_h() * p.beta()) {
            return Err(Error::Infeasible("need R_H > n mu_H beta".into()));
        }
        Ok(Linearized { ctx, gamma_h: p.gamma_h() })
    }

    pub fn context(&self) -> &HermiteContext {
        &self.ctx
    }

    /// (β/(4πμ))^{n/4}, the Γ₀ coefficient of φ⁰.
    pub fn phi0_coefficient(&self) -> f64 {
        (self.ctx.beta() / (4.0 * PI * self.ctx.mu())).powf(0.25 * self.ctx.n() as f64)
    }

    fn check_dim(&self, m: &CoefficientMap) -> Result<()> {
        match m.dim() {
            Some(d) if d != self.ctx.n() => {
                Err(Error::Domain(format!("coefficients have dimension {d}, operator has {}", self.ctx.n())))
            }
            _ => Ok(()),
        }
    }

    /// Applies 𝓛 coefficientwise.
    pub fn forward(&self, c: f64, phi: &CoefficientMap, eta: f64) -> Result<(CoefficientMap, f64, f64)> {
        self.check_dim(phi)?;
        let (mu, beta, n) = (self.ctx.mu(), self.ctx.beta(), self.ctx.n());
        let g = self.phi0_coefficient();
        let zero = MultiIndex::zeros(n);
        let u = MultiIndex::unit(n, 0);
        let mut f = CoefficientMap { entries: BTreeMap::new(), truncated: phi.truncated };
        let (mut h, mut r) = (CompensatedSum::new(), CompensatedSum::new());
        for (k, v) in phi.iter() {
            f.insert(k.clone(), -2.0 * mu * beta * k.sigma() as f64 * v)?;
            h.add(v * moment_mk(k, &self.ctx));
            r.add(v * first_moment_wik(0, k, &self.ctx));
        }
        let fu = f.get(&u) - c * beta / mu * g * (mu / (2.0 * beta)).sqrt();
        f.insert(u, fu)?;
        let f0 = f.get(&zero) - self.gamma_h * eta * g;
        f.insert(zero, f0)?;
        Ok((f, h.value(), r.value()))
    }

    /// Unique (c, φ, η) with 𝓛(c, φ, η) = (f, h, r).
    pub fn inverse(&self, f: &CoefficientMap, h: f64, r: f64) -> Result<LinearizedSolution> {
        self.check_dim(f)?;
        let (mu, beta, n) = (self.ctx.mu(), self.ctx.beta(), self.ctx.n());
        let g = self.phi0_coefficient();
        let zero = MultiIndex::zeros(n);
        let u = MultiIndex::unit(n, 0);
        let eta = -f.get(&zero) / (self.gamma_h * g);

        let mut phi = CoefficientMap { entries: BTreeMap::new(), truncated: f.truncated };
        for (k, v) in f.iter() {
            if *k != zero && *k != u {
                phi.insert(k.clone(), -v / (2.0 * mu * beta * k.sigma() as f64))?;
            }
        }

        // c from the first moment: every k with k₁ odd and the rest even.
        let smax = f.max_sigma();
        let mut shells = vec![0.0; smax + 1];
        let mut acc = CompensatedSum::new();
        for (k, v) in f.iter() {
            if k.in_parity_class(0) {
                let t = first_moment_wik(0, k, &self.ctx) * v / k.sigma() as f64;
                shells[k.sigma()] += t;
                acc.add(t);
            }
        }
        let series_c = acc.value();
        let tail_c = check_tail("first-moment series", &shells, series_c, f.truncated)?;
        let c = -2.0 * mu * beta * r - series_c;

        let a = 1.0 / (2.0 * mu) / (2.0 * mu * beta).sqrt() * g;
        phi.insert(u.clone(), -f.get(&u) / (2.0 * mu * beta) - c * a)?;

        // φ₀ from the mass: every other even index contributes.
        let mut shells = vec![0.0; smax + 1];
        let mut acc = CompensatedSum::new();
        for (k, v) in phi.iter() {
            if !k.is_zero() && k.all_even() {
                let t = v * moment_mk(k, &self.ctx);
                shells[k.sigma()] += t;
                acc.add(t);
            }
        }
        let rest = acc.value();
        let tail_phi0 = check_tail("mass series", &shells, rest, f.truncated)?;
        phi.insert(zero.clone(), (h - rest) / moment_mk(&zero, &self.ctx))?;
        Ok(LinearizedSolution { c, phi, eta, tail_phi0, tail_c })
    }
}

/// Shorthand for [`Linearized::inverse`].
pub fn linearized_inverse(f: &CoefficientMap, h: f64, r: f64, p: &ModelParams) -> Result<LinearizedSolution> {
    Linearized::new(p)?.inverse(f, h, r)
}

/// θ̄ = μ_Hθ/β.
pub fn theta_bar(p: &ModelParams) -> f64 {
    p.mu_h() * p.theta() / p.beta()
}

/// The parameter conditions of the small-ε existence result.
pub fn pursuit_conditions(p: &ModelParams) -> Vec<String> {
    let n = p.n() as f64;
    let mut bad = Vec::new();
    if !(p.r_p() > n * p.mu_p() * p.alpha_p()) {
        bad.push("R_P > n mu_P alpha_P".to_string());
    }
    if !(p.r_h() > n * p.mu_h() * p.beta()) {
        bad.push("R_H > n mu_H beta".to_string());
    }
    let lower = (3.0 * 2f64.powi(p.n() as i32 - 2) - 1.0).max(1.0 / theta_bar_limit());
    if !(p.beta() > lower * p.mu_h() * p.theta()) {
        bad.push(format!("beta > {lower:.6} mu_H theta"));
    }
    if !(p.ell() > 0.0) {
        bad.push("ell > 0".to_string());
    }
    bad
}

/// Derivatives at ε = ρ_max = 0 of the pulse branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderResponse {
    pub dc_deps: f64,
    pub deta_deps: f64,
    /// dφ/dε in the host basis.
    pub dphi_deps: CoefficientMap,
    pub k_max: usize,
    /// Estimated remainder of the dc/dε series beyond σ(k) = k_max.
    pub tail_bound: f64,
    /// Whether the hypotheses of the existence result hold; the formulas are
    /// evaluated either way.
    pub existence_conditions_hold: bool,
    pub violated_conditions: Vec<String>,
}

/// M = (R_H − nμ_Hβ)(R_P − nμ_Pα_P)/(γ_Hγ_P).
pub fn response_amplitude(p: &ModelParams) -> f64 {
    let n = p.n() as f64;
    (p.r_h() - n * p.mu_h() * p.beta()) * (p.r_p() - n * p.mu_p() * p.alpha_p()) / (p.gamma_h() * p.gamma_p())
}

/// Closed-form dη/dε.
pub fn deta_deps(p: &ModelParams) -> f64 {
    let (b, mu, th, l) = (p.beta(), p.mu_h(), p.theta(), p.ell());
    -response_amplitude(p) / p.gamma_h()
        * (b / (b + mu * th)).powf(0.5 * p.n() as f64)
        * (-b * th * l * l / (b + mu * th)).exp()
}

/// Hermite coefficients, up to σ(k) ≤ `k_max`, of the source term
/// f = M φ⁰ e^{−θ‖z+ℓu‖²} obtained by differentiating in ε.
pub fn response_source(p: &ModelParams, k_max: usize) -> Result<CoefficientMap> {
    let ctx = HermiteContext::from_params(p)?;
    let n = p.n();
    let tb = theta_bar(p);
    let lam = (tb / (1.0 + tb)).sqrt();
    let kappa = -ctx.scale() * p.ell();
    let lf = LnFactorials::new(k_max);
    let hf_shift = hermite_functions(k_max, lam * kappa);
    let hf_zero = hermite_functions(k_max, 0.0);
    // Per-axis factor (β/(πμ))^{1/2}(μ/β)^{1/2} hgp(0, k) = π^{−1/2} hgp(0, k).
    let axis = |k: usize, hf: &[f64]| hgp_scaled_with(k, 0, tb, lam, hf, &lf) / PI.sqrt();
    let ax1: Vec<f64> = (0..=k_max).map(|k| axis(k, &hf_shift)).collect();
    let ax0: Vec<f64> = (0..=k_max).map(|k| axis(k, &hf_zero)).collect();
    let g = (p.beta() / (4.0 * PI * p.mu_h())).powf(0.25 * n as f64);
    let amp = response_amplitude(p) * g;
    let mut f = CoefficientMap::truncated();
    for k in MultiIndex::all_up_to(n, k_max) {
        if k.as_slice()[1..].iter().any(|ki| ki % 2 == 1) {
            continue;
        }
        let mut v = amp * ax1[k.get(0)];
        for i in 1..n {
            v *= ax0[k.get(i)];
        }
        f.insert(k, v)?;
    }
    Ok(f)
}

/// dc/dε and dη/dε at ε = 0, summing the source over σ(k) ≤ `k_max`.
pub fn first_order_response(p: &ModelParams, k_max: usize) -> Result<FirstOrderResponse> {
    let lin = Linearized::new(p)?;
    let f = response_source(p, k_max)?;
    let sol = lin.inverse(&f, 0.0, 0.0)?;
    let bad = pursuit_conditions(p);
    Ok(FirstOrderResponse {
        dc_deps: sol.c,
        deta_deps: sol.eta,
        dphi_deps: sol.phi,
        k_max,
        tail_bound: sol.tail_c,
        existence_conditions_hold: bad.is_empty(),
        violated_conditions: bad,
    })
}

/// ln g(j) with
/// g(j) = (2σ+1)⁻¹ (2j₁+1)!/(j₁!)² (λ/2)^{2j₁+1} Π_{i≥2} (λ²/4)^{jᵢ}/jᵢ!.
pub fn ln_g_term(j: &[usize], lambda: f64) -> f64 {
    let s: usize = j.iter().sum();
    let half = (lambda / 2.0).ln();
    let mut ln = -((2 * s + 1) as f64).ln() + ln_factorial(2 * j[0] + 1) - 2.0 * ln_factorial(j[0])
        + (2 * j[0] + 1) as f64 * half;
    for &ji in &j[1..] {
        ln += 2.0 * ji as f64 * half - ln_factorial(ji);
    }
    ln
}

pub fn g_term(j: &[usize], lambda: f64) -> f64 {
    ln_g_term(j, lambda).exp()
}

/// S(j): sum of g(j + k) over k ∈ {0,1}ⁿ with an odd number of ones.
pub fn claim_rhs(j: &[usize], lambda: f64) -> f64 {
    let n = j.len();
    let mut s = CompensatedSum::new();
    for mask in 1u32..(1 << n) {
        if mask.count_ones() % 2 == 1 {
            let jj: Vec<usize> = (0..n).map(|i| j[i] + ((mask >> i) & 1) as usize).collect();
            s.add(g_term(&jj, lambda));
        }
    }
    s.value()
}

/// Outcome of testing g(j) > S(j) over σ(j) ≤ s_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub n: usize,
    pub lambda: f64,
    pub s_max: usize,
    pub tested: usize,
    pub holds: bool,
    /// Index with the largest S(j)/g(j) and that ratio.
    pub worst_index: Vec<usize>,
    pub worst_ratio: f64,
    pub first_failure: Option<Vec<usize>>,
}

pub fn verify_claim(n: usize, lambda: f64, s_max: usize) -> ClaimReport {
    let mut rep = ClaimReport {
        n,
        lambda,
        s_max,
        tested: 0,
        holds: true,
        worst_index: vec![0; n],
        worst_ratio: 0.0,
        first_failure: None,
    };
    for j in MultiIndex::all_up_to(n, s_max) {
        let ratio = claim_rhs(j.as_slice(), lambda) / g_term(j.as_slice(), lambda);
        rep.tested += 1;
        if ratio > rep.worst_ratio {
            rep.worst_ratio = ratio;
            rep.worst_index = j.as_slice().to_vec();
        }
        if !(ratio < 1.0) && rep.first_failure.is_none() {
            rep.holds = false;
            rep.first_failure = Some(j.as_slice().to_vec());
        }
    }
    rep
}

/// 3·2^{n−2}λ² < 1 for n ≥ 2, λ < 1 for n = 1.
pub fn claim_condition_holds(n: usize, lambda: f64) -> bool {
    if n <= 1 {
        lambda < 1.0
    } else {
        3.0 * 2f64.powi(n as i32 - 2) * lambda * lambda < 1.0
    }
}

/// Alternating sum α₀ = Σ (−1)^{σ(j)} g(j) with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha0 {
    pub value: f64,
    /// Magnitude of the first omitted shell, which bounds the remainder of an
    /// alternating series with decreasing shells.
    pub tail_bound: f64,
    pub shells: usize,
}

pub fn alpha0(n: usize, lambda: f64) -> Result<Alpha0> {
    if n == 0 || !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("need n >= 1 and lambda in (0, 1), got {n}, {lambda}")));
    }
    if !claim_condition_holds(n, lambda) {
        return Err(Error::Precondition(format!(
            "3 * 2^(n-2) * lambda^2 = {} >= 1: convergence of the alternating sum is not controlled",
            3.0 * 2f64.powi(n as i32 - 2) * lambda * lambda
        )));
    }
    let mut acc = CompensatedSum::new();
    let mut s = 0usize;
    loop {
        let shell = shell_sum(n, s, lambda);
        let signed = if s.is_multiple_of(2) { shell } else { -shell };
        let next = shell_sum(n, s + 1, lambda);
        acc.add(signed);
        let v = acc.value();
        if next <= 1e-17 * v.abs() || s >= 5000 {
            return Ok(Alpha0 { value: v, tail_bound: next, shells: s + 1 });
        }
        s += 1;
    }
}

/// Σ_{σ(j) = s} g(j).
fn shell_sum(n: usize, s: usize, lambda: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut buf = vec![0; n];
    compositions(s, &mut buf, 0, &mut |j| acc.add(g_term(j, lambda)));
    acc.value()
}

fn compositions(s: usize, buf: &mut [usize], pos: usize, f: &mut impl FnMut(&[usize])) {
    if pos == buf.len() - 1 {
        buf[pos] = s;
        f(buf);
        return;
    }
    for a in 0..=s {
        buf[pos] = a;
        compositions(s - a, buf, pos + 1, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussHermite;

    fn pursuit_params() -> ModelParams {
        ModelParams::reference().with_beta(2.0).unwrap().with_ell(0.05).unwrap()
    }

    #[test]
    fn kernel_point() {
        let p = pursuit_params();
        let s = linearized_inverse(&CoefficientMap::new(), 0.0, 0.0, &p).unwrap();
        assert_eq!(s.c, 0.0);
        assert_eq!(s.eta, 0.0);
        assert!(s.phi.is_empty());
    }

    #[test]
    fn pure_ground_mode() {
        let p = pursuit_params();
        let mut f = CoefficientMap::new();
        f.insert(MultiIndex::zeros(2), 0.7).unwrap();
        let s = linearized_inverse(&f, 0.0, 0.3, &p).unwrap();
        let expect = -0.7 * (4.0 * PI * p.mu_h() / p.beta()).sqrt() / p.gamma_h();
        assert!((s.eta - expect).abs() < 1e-14);
        assert!((s.c + 2.0 * p.mu_h() * p.beta() * 0.3).abs() < 1e-14);
    }

    #[test]
    fn round_trip() {
        let p = pursuit_params();
        let lin = Linearized::new(&p).unwrap();
        let mut f = CoefficientMap::new();
        for (i, k) in MultiIndex::all_up_to(2, 6).into_iter().enumerate() {
            f.insert(k, ((i * 37 % 11) as f64 - 5.0) / 7.0).unwrap();
        }
        let s = lin.inverse(&f, 0.4, -0.2).unwrap();
        let (f2, h, r) = lin.forward(s.c, &s.phi, s.eta).unwrap();
        assert!(f.max_abs_diff(&f2) < 1e-12);
        assert!((h - 0.4).abs() < 1e-12 && (r + 0.2).abs() < 1e-12);
    }

    #[test]
    fn non_decaying_truncation_is_rejected() {
        let p = pursuit_params();
        let mut f = CoefficientMap::truncated();
        for k in MultiIndex::all_up_to(2, 20) {
            f.insert(k, 1.0).unwrap();
        }
        assert!(matches!(linearized_inverse(&f, 0.0, 0.0, &p), Err(Error::SeriesDivergence(_))));
    }

    #[test]
    fn source_matches_quadrature() {
        // Oracle: tensor Gauss-Hermite projection of M φ⁰ e^{−θ‖z+ℓu‖²} on Γ_k.
        let p = pursuit_params();
        let ctx = HermiteContext::from_params(&p).unwrap();
        let f = response_source(&p, 8).unwrap();
        let gh = GaussHermite::new(80).unwrap();
        let m = response_amplitude(&p);
        for k in [MultiIndex::new(&[0, 0]), MultiIndex::new(&[1, 0]), MultiIndex::new(&[3, 2]), MultiIndex::new(&[2, 4])] {
            // z = y/√(β/μ) turns the Gaussian of φ⁰Γ_k into the weight e^{−‖y‖²}.
            let a = ctx.scale();
            let q = gh.integrate2(|y1, y2| {
                let z = [y1 / a, y2 / a];
                let w = (y1 * y1 + y2 * y2).exp();
                let phi0 = (p.beta() / (2.0 * PI * p.mu_h())) * (-p.beta() * (z[0] * z[0] + z[1] * z[1]) / (2.0 * p.mu_h())).exp();
                let ker = (-p.theta() * ((z[0] + p.ell()).powi(2) + z[1] * z[1])).exp();
                w * m * phi0 * ker * gamma_k(&k, &z, &ctx)
            }) / (a * a);
            assert!((q - f.get(&k)).abs() < 1e-10 * (1.0 + q.abs()), "{k}: {q} vs {}", f.get(&k));
        }
    }

    #[test]
    fn response_signs_and_symmetry() {
        let p = pursuit_params();
        let r = first_order_response(&p, 60).unwrap();
        assert!(r.existence_conditions_hold, "{:?}", r.violated_conditions);
        assert!(r.deta_deps < 0.0);
        assert!(r.dc_deps > 0.0);
        assert!((r.deta_deps - deta_deps(&p)).abs() < 1e-12 * r.deta_deps.abs());
        let r0 = first_order_response(&p.with_ell(0.0).unwrap(), 60).unwrap();
        assert!(r0.dc_deps.abs() < 1e-15);
        assert!(!r0.existence_conditions_hold);
    }

    #[test]
    fn alpha0_one_dimensional_closed_form() {
        for lam in [0.1, 0.5, 0.9] {
            let a = alpha0(1, lam).unwrap();
            let exact = lam / (2.0 * (1.0 + lam * lam).sqrt());
            assert!((a.value - exact).abs() < 1e-13, "{lam}: {} vs {exact}", a.value);
        }
    }

    #[test]
    fn alpha0_integral_representation() {
        // 1/(2σ+1) = ∫₀¹ t^{2σ} dt turns the alternating sum into an integral.
        for (n, lam) in [(2usize, 0.3f64), (2, 0.55), (3, 0.3)] {
            let a = alpha0(n, lam).unwrap().value;
            let mut s = CompensatedSum::new();
            let m = 20000;
            for i in 0..=m {
                let t = i as f64 / m as f64;
                let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                s.add(w * (1.0 + lam * lam * t * t).powf(-1.5) * (-((n - 1) as f64) * lam * lam * t * t / 4.0).exp());
            }
            let simpson = lam / 2.0 * s.value() / (3.0 * m as f64);
            assert!((a - simpson).abs() < 1e-12, "n={n}: {a} vs {simpson}");
            assert!(a > 0.0);
        }
    }

    #[test]
    fn alpha0_small_lambda() {
        let a = alpha0(2, 1e-4).unwrap().value;
        assert!((a - 0.5e-4).abs() < 1e-11);
    }

    #[test]
    fn claim_both_directions() {
        let ok = verify_claim(2, 0.3, 12);
        assert!(ok.holds);
        let bad = verify_claim(2, 0.9f64.sqrt(), 12);
        assert!(!bad.holds);
        assert!(alpha0(2, 0.9f64.sqrt()).is_err());
    }
}
