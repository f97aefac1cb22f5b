//! Series bounds behind the decay of the pursuit-pulse host profile.
//!
//! γ_j^k = (1+j)^{−b} λ^{j+k} Σ_{l ≤ min(j,k)} √(C(j,l)C(k,l)) θ̄^{−l}
//!         / (max(1,(k−l)^{1/4}) max(1,(j−l)^{1/4}))
//! with λ = √(θ̄/(1+θ̄)). Every term is formed in log domain; the l-sum only
//! visits a window around its peak, outside which terms are below 1e-18 of
//! the largest one.

use std::f64::consts::PI;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{hermite_functions, hgp_scaled_with};
use crate::par;
use crate::special::{log_sum_exp, CompensatedSum, LnFactorials};
use crate::tolerances::{theta_bar_limit, BINOM_LOG_SLACK, SERIES_TAIL_TOL};

/// Default decay exponent b used by every bound experiment.
pub const DEFAULT_B: f64 = 5.0;

/// Window half-depth in log units for l-sums: e^{−41.4} ≈ 1e-18.
const LN_WINDOW: f64 = 41.4;

/// Scaled parameters of the series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    pub theta_bar: f64,
    pub b: f64,
    pub c_bar: f64,
    pub ell_bar: f64,
    pub tau: f64,
    pub n: usize,
}

impl SeriesParams {
    pub fn new(theta_bar: f64, b: f64, n: usize) -> Result<Self> {
        if !(theta_bar > 0.0 && theta_bar.is_finite()) || !b.is_finite() || n == 0 {
            return Err(Error::Domain(format!("need theta_bar > 0, finite b, n >= 1; got {theta_bar}, {b}, {n}")));
        }
        Ok(SeriesParams { theta_bar, b, c_bar: 0.0, ell_bar: 0.0, tau: 0.0, n })
    }

    /// Sets the shift κ = −(c̄τ + ℓ̄) of the Gaussian weight.
    pub fn with_shift(mut self, c_bar: f64, ell_bar: f64, tau: f64) -> Result<Self> {
        if !(c_bar.is_finite() && ell_bar.is_finite() && tau.is_finite()) {
            return Err(Error::Domain("shift parameters must be finite".into()));
        }
        self.c_bar = c_bar;
        self.ell_bar = ell_bar;
        self.tau = tau;
        Ok(self)
    }

    /// θ̄ = μ_Hθ/β, c̄ = √(β/μ_H)c, ℓ̄ = √(β/μ_H)ℓ from model parameters.
    pub fn from_model(p: &crate::model::ModelParams, c: f64, b: f64) -> Result<Self> {
        if !(p.beta() > 0.0) {
            return Err(Error::Domain("the series are defined for beta > 0".into()));
        }
        let s = (p.beta() / p.mu_h()).sqrt();
        SeriesParams::new(p.mu_h() * p.theta() / p.beta(), b, p.n())?.with_shift(s * c, s * p.ell(), p.tau())
    }

    pub fn lambda(&self) -> f64 {
        (self.theta_bar / (1.0 + self.theta_bar)).sqrt()
    }

    /// θ̄ < √5 − 2.
    pub fn within_hypothesis(&self) -> bool {
        self.theta_bar < theta_bar_limit()
    }

    /// Predicted rate q = (2√2λ/(1+θ̄))^{1/2} of the outer partial sums.
    pub fn geometric_rate(&self) -> f64 {
        (2.0 * 2f64.sqrt() * self.lambda() / (1.0 + self.theta_bar)).sqrt()
    }

    fn kappa(&self, u: f64) -> f64 {
        -(self.c_bar * self.tau + self.ell_bar) * u
    }
}

/// Log-domain lookup tables shared by many γ evaluations.
pub struct SeriesTables {
    lf: LnFactorials,
    /// ln max(1, m^{1/4}).
    ln_quart: Vec<f64>,
}

impl SeriesTables {
    pub fn new(max: usize) -> Self {
        SeriesTables {
            lf: LnFactorials::new(max),
            ln_quart: (0..=max).map(|m| if m <= 1 { 0.0 } else { 0.25 * (m as f64).ln() }).collect(),
        }
    }

    pub fn max(&self) -> usize {
        self.lf.max()
    }
}

/// Center of the l-sum: (j−l)(k−l) = θ̄²(l+1)², smaller root, clamped.
fn l_peak(j: usize, k: usize, theta_bar: f64) -> usize {
    let t = theta_bar * theta_bar;
    let (jf, kf) = (j as f64, k as f64);
    let m = j.min(k);
    let l = if (1.0 - t).abs() < 1e-12 {
        (jf * kf - t) / (jf + kf + 2.0 * t)
    } else {
        let bb = jf + kf + 2.0 * t;
        let disc = (bb * bb - 4.0 * (1.0 - t) * (jf * kf - t)).max(0.0);
        (bb - disc.sqrt()) / (2.0 * (1.0 - t))
    };
    (l.max(0.0).round() as usize).min(m)
}

/// ln Σ_l √(C(j,l)C(k,l)) θ̄^{−l} [/ quartic denominators], windowed.
fn ln_l_sum(j: usize, k: usize, theta_bar: f64, quartic: bool, t: &SeriesTables) -> f64 {
    let m = j.min(k);
    let lt = theta_bar.ln();
    let term = |l: usize| {
        let mut v = 0.5 * (t.lf.ln_binomial(j, l) + t.lf.ln_binomial(k, l)) - l as f64 * lt;
        if quartic {
            v -= t.ln_quart[k - l] + t.ln_quart[j - l];
        }
        v
    };
    let l0 = l_peak(j, k, theta_bar);
    let mut terms = vec![term(l0)];
    let mut top = terms[0];
    let mut l = l0;
    while l > 0 {
        l -= 1;
        let v = term(l);
        top = top.max(v);
        terms.push(v);
        if v < top - LN_WINDOW {
            break;
        }
    }
    let mut l = l0;
    while l < m {
        l += 1;
        let v = term(l);
        top = top.max(v);
        terms.push(v);
        if v < top - LN_WINDOW {
            break;
        }
    }
    log_sum_exp(&terms)
}

fn ln_gamma_common(j: usize, k: usize, sp: &SeriesParams, quartic: bool, t: &SeriesTables) -> f64 {
    -sp.b * (1.0 + j as f64).ln() + (j + k) as f64 * sp.lambda().ln() + ln_l_sum(j, k, sp.theta_bar, quartic, t)
}

/// ln γ_j^k.
pub fn ln_gamma_jk_with(j: usize, k: usize, sp: &SeriesParams, t: &SeriesTables) -> f64 {
    ln_gamma_common(j, k, sp, true, t)
}

/// γ_j^k.
pub fn gamma_jk(j: usize, k: usize, sp: &SeriesParams) -> f64 {
    ln_gamma_jk_with(j, k, sp, &SeriesTables::new(j.max(k))).exp()
}

/// γ̃_j^k: the same sum without the quartic denominators.
pub fn gamma_tilde(j: usize, k: usize, sp: &SeriesParams) -> f64 {
    ln_gamma_common(j, k, sp, false, &SeriesTables::new(j.max(k))).exp()
}

/// ln of the geometric majorant of Σ_{j ≥ J} (1+j)^{−e} λ^{j+k} √2^j S_k,
/// valid for J ≥ k, with S_k the Cauchy-Schwarz bound on the l-sum.
/// Infinite when √2λ ≥ 1.
fn ln_tail_majorant(jstart: usize, k: usize, exponent: f64, sp: &SeriesParams) -> f64 {
    let lam = sp.lambda();
    let r = 2f64.sqrt() * lam;
    if r >= 1.0 {
        return f64::INFINITY;
    }
    let inv = 1.0 / sp.theta_bar;
    let kf = k as f64;
    // Σ_{l≤k} θ̄^{−l} = (θ̄^{−(k+1)} − 1)/(θ̄^{−1} − 1), in logs.
    let ln_geo = if (inv - 1.0).abs() < 1e-12 {
        (kf + 1.0).ln()
    } else if inv > 1.0 {
        (kf + 1.0) * inv.ln() + (-(-(kf + 1.0) * inv.ln()).exp_m1()).ln() - (inv - 1.0).ln()
    } else {
        (-(kf + 1.0) * inv.ln()).exp_m1().abs().ln() - (1.0 - inv).ln()
    };
    let ln_sk = 0.5 * (kf * ((1.0 + sp.theta_bar) / sp.theta_bar).ln() + ln_geo);
    let jf = jstart as f64;
    -exponent.max(0.0) * (1.0 + jf).ln() + (jf + kf) * lam.ln() + jf * r.ln() + ln_sk - (1.0 - r).ln()
}

/// A truncated series value with its remainder bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// Partition of Σ_j γ_j^k at k/2 and 3k/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSum {
    pub k: usize,
    pub total: f64,
    /// j ≤ k/2.
    pub part_i: f64,
    /// j ≥ 3k/2.
    pub part_ii: f64,
    /// k/2 < j < 3k/2.
    pub middle: f64,
    /// max over the middle band of γ_j^k.
    pub middle_max: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// Σ_j γ_j^k with the stopping rule: j ≥ 3k/2, ten consecutive terms below
/// 1e-16 of the partial sum, and a geometric tail below 1e-12 of it.
pub fn gamma_sum(k: usize, sp: &SeriesParams, t: &SeriesTables) -> Result<GammaSum> {
    let jmax = t.max();
    let mut total = CompensatedSum::new();
    let (mut pi, mut pii, mut mid) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    let mut middle_max: f64 = 0.0;
    let mut small = 0usize;
    for j in 0..=jmax {
        let g = ln_gamma_jk_with(j, k, sp, t).exp();
        total.add(g);
        if 2 * j <= k {
            pi.add(g);
        } else if 2 * j >= 3 * k {
            pii.add(g);
        } else {
            mid.add(g);
            middle_max = middle_max.max(g);
        }
        let s = total.value();
        small = if g < 1e-16 * s { small + 1 } else { 0 };
        if 2 * j >= 3 * k && small >= 10 {
            let tail = ln_tail_majorant(j + 1, k, sp.b, sp).exp();
            if tail < SERIES_TAIL_TOL * s {
                return Ok(GammaSum {
                    k,
                    total: s,
                    part_i: pi.value(),
                    part_ii: pii.value(),
                    middle: mid.value(),
                    middle_max,
                    tail_bound: tail,
                    terms: j + 1,
                });
            }
        }
    }
    Err(Error::SeriesDivergence(format!("sum over j for k = {k} not converged by j = {jmax}")))
}

/// Table size sufficient for [`gamma_sum`] at every k ≤ `k_max`.
pub fn tables_for(k_max: usize, sp: &SeriesParams) -> SeriesTables {
    // Beyond 3k/2 the majorant decays like (√2λ)^j θ̄^{−k/2}.
    let r = 2f64.sqrt() * sp.lambda();
    let extra = if r < 1.0 {
        ((k_max as f64 * 0.5 * (1.0 / sp.theta_bar).ln().max(0.0) + 80.0) / -r.ln()).ceil() as usize
    } else {
        4 * k_max
    };
    SeriesTables::new(3 * k_max / 2 + extra.min(20 * k_max + 2000) + 64)
}

/// Σ(k,u) = Σ_j p(j)^{−1/n}(1+j)^{−(b−1/n)} |∫H_jH_k e^{−y²−θ̄(y−κ)²}|/√(2^{j+k}j!k!).
pub fn sigma_series(k: usize, u: f64, sp: &SeriesParams) -> Result<SeriesValue> {
    if !(u == 0.0 || u == 1.0) {
        return Err(Error::Domain(format!("u must be 0 or 1, got {u}")));
    }
    let t = tables_for(k, sp);
    let jmax = t.max();
    let lam = sp.lambda();
    let kappa = sp.kappa(u);
    let hf = hermite_functions(jmax.max(k), lam * kappa);
    let inv_n = 1.0 / sp.n as f64;
    let e = sp.b - inv_n;
    // Cramér: |ĥ_m| ≤ 1.0865 π^{−1/4}; with √(π/(1+θ̄)) this dominates by γ̃.
    let cramer = 1.0865 * 1.0865 / PI.sqrt() * (PI / (1.0 + sp.theta_bar)).sqrt();
    let mut acc = CompensatedSum::new();
    let mut small = 0usize;
    for j in 0..=jmax {
        let pj = if j == 0 { 1.0 } else { j as f64 };
        let v = hgp_scaled_with(j, k, sp.theta_bar, lam, &hf, &t.lf).abs()
            * pj.powf(-inv_n)
            * (1.0 + j as f64).powf(-e);
        acc.add(v);
        let s = acc.value();
        small = if v <= 1e-16 * s { small + 1 } else { 0 };
        if j >= k && 2 * j >= 3 * k && small >= 10 {
            let tail = cramer * ln_tail_majorant(j + 1, k, e, sp).exp();
            if tail < SERIES_TAIL_TOL * s.max(f64::MIN_POSITIVE) || s == 0.0 && tail < SERIES_TAIL_TOL {
                return Ok(SeriesValue { value: s, tail_bound: tail, terms: j + 1 });
            }
        }
    }
    Err(Error::SeriesDivergence(format!("Sigma({k}, {u}) not converged by j = {jmax}")))
}

/// One row of a boundedness experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledRow {
    pub k: usize,
    pub sum: f64,
    pub scaled_sum: f64,
    pub exponent: f64,
    /// sup·(1+k)^{−exponent}: the envelope implied by the observed sup.
    pub bound_estimate: f64,
}

/// (1+k)^{exponent} Σ_j γ_j^k over k = 1…k_max with summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub params: SeriesParams,
    pub exponent: f64,
    pub k_max: usize,
    pub rows: Vec<ScaledRow>,
    pub sup: f64,
    pub argsup: usize,
    /// Max over k ∈ [k_max/10, k_max].
    pub last_decade_max: f64,
    /// Least-squares slope of ln(scaled) against ln(1+k) over the last decade;
    /// a bounded sequence has slope ≲ 0.
    pub trend_slope: f64,
    /// Largest (1+k)^{b+1/2} max_{middle j} γ_j^k over k ∈ [100, k_max].
    pub middle_band_constant: f64,
    /// Ratio of the largest to the smallest middle-band constant over the same range.
    pub middle_band_spread: f64,
    pub within_hypothesis: bool,
    pub bounded: bool,
    /// True when the verdict is evidence rather than a proven statement.
    pub evidence_only: bool,
}

impl BoundReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,scaled_sum,exponent,bound_estimate\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{},{:e}\n", r.k, r.scaled_sum, r.exponent, r.bound_estimate));
        }
        s
    }
}

/// Σ_j γ_j^k for k = 1…k_max, evaluated in parallel with per-k order fixed.
pub fn gamma_sums(sp: &SeriesParams, k_max: usize) -> Result<Vec<GammaSum>> {
    let t = tables_for(k_max, sp);
    par::map_indexed(k_max, |i| gamma_sum(i + 1, sp, &t)).into_iter().collect()
}

fn report_from(sp: &SeriesParams, sums: &[GammaSum], exponent: f64, evidence_only: bool) -> BoundReport {
    let k_max = sums.last().map_or(0, |s| s.k);
    let mut rows: Vec<ScaledRow> = sums
        .iter()
        .map(|s| ScaledRow {
            k: s.k,
            sum: s.total,
            scaled_sum: (1.0 + s.k as f64).powf(exponent) * s.total,
            exponent,
            bound_estimate: 0.0,
        })
        .collect();
    let (mut sup, mut argsup) = (0.0, 0);
    for r in &rows {
        if r.scaled_sum > sup {
            sup = r.scaled_sum;
            argsup = r.k;
        }
    }
    for r in &mut rows {
        r.bound_estimate = sup * (1.0 + r.k as f64).powf(-exponent);
    }
    let decade: Vec<&ScaledRow> = rows.iter().filter(|r| 10 * r.k >= k_max).collect();
    let last_decade_max = decade.iter().map(|r| r.scaled_sum).fold(0.0, f64::max);
    let trend_slope = slope(
        &decade.iter().map(|r| (1.0 + r.k as f64).ln()).collect::<Vec<_>>(),
        &decade.iter().map(|r| r.scaled_sum.ln()).collect::<Vec<_>>(),
    );
    let mids: Vec<f64> = sums
        .iter()
        .filter(|s| s.k >= 100)
        .map(|s| (1.0 + s.k as f64).powf(sp.b + 0.5) * s.middle_max)
        .collect();
    let mmax = mids.iter().copied().fold(0.0, f64::max);
    let mmin = mids.iter().copied().fold(f64::INFINITY, f64::min);
    BoundReport {
        params: *sp,
        exponent,
        k_max,
        rows,
        sup,
        argsup,
        last_decade_max,
        trend_slope,
        middle_band_constant: mmax,
        middle_band_spread: if mids.is_empty() { f64::NAN } else { mmax / mmin },
        within_hypothesis: sp.within_hypothesis(),
        bounded: last_decade_max <= sup && trend_slope <= 0.05,
        evidence_only,
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// The proven bound: (1+k)^{b−1/2} Σ_j γ_j^k stays bounded.
pub fn verify_limsup(sp: &SeriesParams, k_max: usize) -> Result<BoundReport> {
    if !sp.within_hypothesis() {
        return Err(Error::Precondition(format!(
            "theta_bar = {} is not below sqrt(5) - 2",
            sp.theta_bar
        )));
    }
    let sums = gamma_sums(sp, k_max)?;
    Ok(report_from(sp, &sums, sp.b - 0.5, false))
}

/// The conjectured sharper bound with exponent b − 1/n, as evidence only.
pub fn verify_conjecture(sp: &SeriesParams, n: usize, k_max: usize) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let sums = gamma_sums(sp, k_max)?;
    Ok(report_from(sp, &sums, sp.b - 1.0 / n as f64, true))
}

/// Same as the two verifiers but reusing precomputed sums.
pub fn report_for_exponent(sp: &SeriesParams, sums: &[GammaSum], exponent: f64, evidence_only: bool) -> BoundReport {
    report_from(sp, sums, exponent, evidence_only)
}

fn big_binomial(n: usize, k: usize) -> BigUint {
    let mut c = BigUint::from(1u32);
    for i in 0..k {
        c *= BigUint::from(n - i);
        c /= BigUint::from(i + 1);
    }
    c
}

/// C(j,l)C(k,l) ≤ C((j+k)/2, l)²: exact in integers when j+k is even,
/// through log-gamma with a 1e-12 relative slack otherwise.
pub fn binom_inequality(j: usize, k: usize, l: usize) -> Result<bool> {
    if l > j.min(k) {
        return Err(Error::Precondition(format!("need l <= min(j, k), got l = {l}, j = {j}, k = {k}")));
    }
    if (j + k).is_multiple_of(2) {
        let m = (j + k) / 2;
        let rhs = big_binomial(m, l);
        return Ok(big_binomial(j, l) * big_binomial(k, l) <= &rhs * &rhs);
    }
    use statrs::function::gamma::ln_gamma;
    let ln_c = |x: f64| ln_gamma(x + 1.0) - ln_gamma(l as f64 + 1.0) - ln_gamma(x - l as f64 + 1.0);
    let lhs = ln_c(j as f64) + ln_c(k as f64);
    let rhs = 2.0 * ln_c(0.5 * (j + k) as f64);
    Ok(lhs <= rhs + BINOM_LOG_SLACK * rhs.abs().max(1.0))
}

/// Slack of the Cauchy-Schwarz step on a_{j,k,l} = √(C(j,l)C(k,l)) θ̄^{−l}:
/// RHS − LHS of Σ a/((k−l)(j−l))^{1/4} ≤ (Σ a)^{1/2} (Σ a/((k−l)(j−l))^{1/2})^{1/2},
/// relative to the RHS, over l < min(j,k).
pub fn cauchy_schwarz_slack(j: usize, k: usize, theta_bar: f64) -> f64 {
    let m = j.min(k);
    if m == 0 {
        return 0.0;
    }
    let t = SeriesTables::new(j.max(k));
    let lt = theta_bar.ln();
    let ln_a: Vec<f64> =
        (0..m).map(|l| 0.5 * (t.lf.ln_binomial(j, l) + t.lf.ln_binomial(k, l)) - l as f64 * lt).collect();
    let ln_d = |l: usize| 0.25 * (((k - l) as f64).ln() + ((j - l) as f64).ln());
    let lhs = log_sum_exp(&(0..m).map(|l| ln_a[l] - ln_d(l)).collect::<Vec<_>>());
    let r1 = log_sum_exp(&ln_a);
    let r2 = log_sum_exp(&(0..m).map(|l| ln_a[l] - 2.0 * ln_d(l)).collect::<Vec<_>>());
    let rhs = 0.5 * (r1 + r2);
    -(lhs - rhs).exp_m1()
}

/// The two outer partial sums at one k and the predicted rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartBounds {
    pub k: usize,
    pub part_i: f64,
    pub part_ii: f64,
    pub geometric_rate: f64,
}

pub fn proof_part_bounds(sp: &SeriesParams, k: usize) -> Result<PartBounds> {
    if !sp.within_hypothesis() {
        return Err(Error::Precondition(format!("theta_bar = {} is not below sqrt(5) - 2", sp.theta_bar)));
    }
    let s = gamma_sum(k, sp, &tables_for(k, sp))?;
    Ok(PartBounds { k, part_i: s.part_i, part_ii: s.part_ii, geometric_rate: sp.geometric_rate() })
}

/// Outcome of comparing the outer partial sums with C·q^k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartBoundReport {
    pub k_range: (usize, usize),
    pub geometric_rate: f64,
    /// C fitted as the largest part/q^k over the first ten k of the range.
    pub c_part_i: f64,
    pub c_part_ii: f64,
    /// Largest part/(C q^k) over the whole range; ≤ 1 means dominated.
    pub worst_ratio_i: f64,
    pub worst_ratio_ii: f64,
    /// Observed per-step decay factors from a log-linear fit.
    pub observed_rate_i: f64,
    pub observed_rate_ii: f64,
    pub dominated: bool,
}

pub fn verify_part_bounds(sp: &SeriesParams, k_lo: usize, k_hi: usize) -> Result<PartBoundReport> {
    if !sp.within_hypothesis() {
        return Err(Error::Precondition(format!("theta_bar = {} is not below sqrt(5) - 2", sp.theta_bar)));
    }
    if k_hi < k_lo + 10 {
        return Err(Error::Domain("k range must span at least ten values".into()));
    }
    let t = tables_for(k_hi, sp);
    let sums: Vec<GammaSum> =
        par::map_indexed(k_hi - k_lo + 1, |i| gamma_sum(k_lo + i, sp, &t)).into_iter().collect::<Result<_>>()?;
    let q = sp.geometric_rate();
    let ln_q = q.ln();
    let fit = |f: &dyn Fn(&GammaSum) -> f64| -> (f64, f64, f64) {
        let c = sums[..10].iter().map(|s| f(s).ln() - s.k as f64 * ln_q).fold(f64::NEG_INFINITY, f64::max);
        let worst = sums.iter().map(|s| f(s).ln() - s.k as f64 * ln_q - c).fold(f64::NEG_INFINITY, f64::max);
        let ks: Vec<f64> = sums.iter().map(|s| s.k as f64).collect();
        let ls: Vec<f64> = sums.iter().map(|s| f(s).ln()).collect();
        (c.exp(), worst.exp(), slope(&ks, &ls).exp())
    };
    let (c1, w1, r1) = fit(&|s| s.part_i);
    let (c2, w2, r2) = fit(&|s| s.part_ii);
    Ok(PartBoundReport {
        k_range: (k_lo, k_hi),
        geometric_rate: q,
        c_part_i: c1,
        c_part_ii: c2,
        worst_ratio_i: w1,
        worst_ratio_ii: w2,
        observed_rate_i: r1,
        observed_rate_ii: r2,
        dominated: w1 <= 1.0 + 1e-9 && w2 <= 1.0 + 1e-9,
    })
}
