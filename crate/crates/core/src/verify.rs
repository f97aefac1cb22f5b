//! Verification suites: each check compares a closed form or a claimed
//! property with an independent numerical oracle and records a table row.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::linearized::{
    alpha0, claim_condition_holds, first_order_response, pursuit_conditions, verify_claim, CoefficientMap, Linearized,
};
use crate::analytic::pursuit::{pursuit_psi, relation3_p, unperturbed_host, PursuitPulse};
use crate::analytic::stationary::{
    default_grid, psi_stationary, solve_stationary_on, stationary_exists, stationary_residual, HostOperator,
};
use crate::error::{Error, Result};
use crate::hermite::{
    first_moment_wik, gamma_k, gamma_k_derivative, gaussian_overlap_even, gaussian_overlap_first, hermite,
    hermite_function, hermite_gauss_product, hermite_scale_shift, moment_mk, HermiteContext, MultiIndex,
};
use crate::model::ModelParams;
use crate::output::fmt_num;
use crate::quadrature::{integrate_adaptive, integrate_adaptive2, GaussHermite};
use crate::series::{
    binom_inequality, cauchy_schwarz_slack, gamma_jk, gamma_sums, gamma_tilde, report_for_exponent,
    verify_part_bounds, BoundReport, PartBoundReport, SeriesParams, DEFAULT_B,
};
use crate::tolerances::theta_bar_limit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Hermite,
    Stationary,
    Pursuit,
    Series,
    All,
}

impl Suite {
    pub fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Hermite, Suite::Stationary, Suite::Pursuit, Suite::Series],
            s => vec![s],
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            Suite::Hermite => "hermite",
            Suite::Stationary => "stationary",
            Suite::Pursuit => "pursuit",
            Suite::Series => "series",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hermite" => Suite::Hermite,
            "stationary" => Suite::Stationary,
            "pursuit" => Suite::Pursuit,
            "series" => Suite::Series,
            "all" => Suite::All,
            _ => return Err(Error::Config(format!("unknown suite '{s}' (hermite, stationary, pursuit, series, all)"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Precondition not met; nothing was asserted.
    Skip,
    /// Evidence reported without a verdict.
    Info,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
            Status::Info => "INFO",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub status: Status,
    pub detail: String,
}

/// Knobs of the series suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub k_max: usize,
    pub b: f64,
    pub theta_bar: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { k_max: 2000, b: DEFAULT_B, theta_bar: 0.1 }
    }
}

/// Rows of one or more suites plus the data files they produced.
#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    /// (relative path, contents) of generated artifacts.
    pub artifacts: Vec<(String, String)>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }

    pub fn table(&self) -> String {
        let w = self.checks.iter().map(|c| c.suite.len() + c.name.len() + 2).max().unwrap_or(0);
        let mut s = String::new();
        for c in &self.checks {
            let key = format!("{}: {}", c.suite, c.name);
            s.push_str(&format!("{}  {key:<w$}  {}\n", c.status, c.detail));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let esc = |x: &str| format!("\"{}\"", x.replace('"', "\"\""));
        let mut s = String::from("suite,check,status,detail\n");
        for c in &self.checks {
            s.push_str(&format!("{},{},{},{}\n", c.suite, esc(&c.name), c.status, esc(&c.detail)));
        }
        s
    }

    fn push(&mut self, suite: Suite, name: &str, f: impl FnOnce() -> Result<(Status, String)>) {
        let (status, detail) = match f() {
            Ok(v) => v,
            Err(Error::Precondition(m)) => (Status::Skip, format!("precondition: {m}")),
            Err(e) => (Status::Fail, format!("error: {e}")),
        };
        self.checks.push(Check { suite: suite.name().into(), name: name.into(), status, detail });
    }

    fn artifact(&mut self, path: &str, contents: String) {
        self.artifacts.push((path.into(), contents));
    }
}

fn verdict(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> SuiteReport {
    let mut r = SuiteReport::default();
    for s in suite.members() {
        match s {
            Suite::Hermite => hermite_suite(&mut r),
            Suite::Stationary => stationary_suite(&mut r),
            Suite::Pursuit => pursuit_suite(&mut r),
            Suite::Series => series_suite(&mut r, opts),
            Suite::All => unreachable!(),
        }
    }
    r
}

// ---------------------------------------------------------------- hermite

/// (μ, β) draws for the basis checks.
const CTX_DRAWS: [(f64, f64); 3] = [(0.316_227_766_016_837_94, 1.0), (0.5, 2.0), (1.0, 0.7)];

/// Relative agreement with an adaptive-quadrature oracle. `scale` is the
/// integral of |f|, so exact zeros are judged against the integrand size.
struct Agreement {
    worst: f64,
    cases: usize,
}

impl Agreement {
    fn new() -> Self {
        Agreement { worst: 0.0, cases: 0 }
    }
    fn add(&mut self, closed: f64, oracle: f64, scale: f64) {
        let e = (closed - oracle).abs() / oracle.abs().max(scale).max(f64::MIN_POSITIVE);
        self.worst = self.worst.max(e);
        self.cases += 1;
    }
    fn result(&self, tol: f64) -> (Status, String) {
        (verdict(self.worst < tol), format!("worst rel err {} over {} cases (tol {})", fmt_num(self.worst), self.cases, fmt_num(tol)))
    }
}

fn quad1(f: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let v = integrate_adaptive(&f, 1e-12)?;
    // The scale only needs to be rough; |f| has kinks.
    let a = integrate_adaptive(|x| f(x).abs(), 1e-5)?;
    Ok((v, a))
}

/// Runs a closed form against quadrature over the context draws: all
/// indices with σ ≤ 12 in one dimension by adaptive trapezoid, σ ≤ 6 in two
/// by a tensor Gauss-Hermite rule matched to the Gaussian factor
/// e^{−(a²/2 + extra)‖z‖²} of the integrand, a² = β/μ.
fn closed_vs_quadrature(
    closed: impl Fn(&MultiIndex, &HermiteContext) -> Result<f64>,
    integrand: impl Fn(&MultiIndex, &HermiteContext, &[f64]) -> f64,
    extra: impl Fn(&HermiteContext) -> f64,
) -> Result<(Status, String)> {
    let gh = GaussHermite::new(60)?;
    let mut agg = Agreement::new();
    for &(mu, beta) in &CTX_DRAWS {
        let ctx1 = HermiteContext::new(mu, beta, 1)?;
        for k in MultiIndex::all_up_to(1, 12) {
            let (v, a) = quad1(|x| integrand(&k, &ctx1, &[x]))?;
            agg.add(closed(&k, &ctx1)?, v, a);
        }
        let ctx2 = HermiteContext::new(mu, beta, 2)?;
        let c = 0.5 * ctx2.scale().powi(2) + extra(&ctx2);
        let sc = c.sqrt();
        for k in MultiIndex::all_up_to(2, 6) {
            let f = |x: f64, y: f64| (x * x + y * y).exp() * integrand(&k, &ctx2, &[x / sc, y / sc]) / c;
            let v = gh.integrate2(f);
            let a = gh.integrate2(|x, y| f(x, y).abs());
            agg.add(closed(&k, &ctx2)?, v, a);
        }
    }
    Ok(agg.result(1e-8))
}

fn hermite_suite(r: &mut SuiteReport) {
    let s = Suite::Hermite;
    r.push(s, "basis orthonormality, sigma <= 8, n <= 2", || {
        let gh = GaussHermite::new(60)?;
        let mut worst: f64 = 0.0;
        let mut pairs = 0;
        for &(mu, beta) in &CTX_DRAWS {
            for n in [1usize, 2] {
                let ctx = HermiteContext::new(mu, beta, n)?;
                let a = ctx.scale();
                let idx = MultiIndex::all_up_to(n, 8);
                // ∫ f dz = a^{−n} Σ w e^{‖x‖²} f(x/a): Γ_jΓ_k carries e^{−a²‖z‖²}.
                for (i, j) in idx.iter().enumerate() {
                    for k in &idx[i..] {
                        let v = if n == 1 {
                            gh.integrate(|x| (x * x).exp() * gamma_k(j, &[x / a], &ctx) * gamma_k(k, &[x / a], &ctx)) / a
                        } else {
                            gh.integrate2(|x, y| {
                                let z = [x / a, y / a];
                                (x * x + y * y).exp() * gamma_k(j, &z, &ctx) * gamma_k(k, &z, &ctx)
                            }) / (a * a)
                        };
                        let delta = if j == k { 1.0 } else { 0.0 };
                        worst = worst.max((v - delta).abs());
                        pairs += 1;
                    }
                }
            }
        }
        Ok((verdict(worst < 1e-8), format!("max |<G_j,G_k> - delta| = {} over {pairs} pairs", fmt_num(worst))))
    });
    r.push(s, "integral of basis function", || {
        closed_vs_quadrature(|k, c| Ok(moment_mk(k, c)), |k, c, z| gamma_k(k, z, c), |_| 0.0)
    });
    r.push(s, "first moment of basis function", || {
        closed_vs_quadrature(
            |k, c| Ok(first_moment_wik(c.n() - 1, k, c)),
            |k, c, z| z[c.n() - 1] * gamma_k(k, z, c),
            |_| 0.0,
        )
    });
    r.push(s, "first moment against the host Gaussian", || {
        closed_vs_quadrature(
            |k, c| Ok(gaussian_overlap_first(0, k, c)),
            |k, c, z| {
                let r2: f64 = z.iter().map(|x| x * x).sum();
                z[0] * gamma_k(k, z, c) * (-c.beta() * r2 / (2.0 * c.mu())).exp()
            },
            |c| c.beta() / (2.0 * c.mu()),
        )
    });
    for theta in [0.25, 1.0, 2.0] {
        r.push(s, &format!("even basis function against exp(-theta |z|^2), theta = {theta}"), || {
            closed_vs_quadrature(
                |k, c| gaussian_overlap_even(&MultiIndex::new(k.as_slice()), theta, c),
                |k, c, z| {
                    let r2: f64 = z.iter().map(|x| x * x).sum();
                    gamma_k(&k.doubled(), z, c) * (-theta * r2).exp()
                },
                move |_| theta,
            )
        });
    }
    r.push(s, "Hermite-Gaussian product integral, j,k <= 15", || {
        let mut agg = Agreement::new();
        for theta in [0.25, 1.0, 2.0] {
            for kappa in [0.0, 0.7, -0.7] {
                for j in 0..=15 {
                    for k in 0..=j {
                        let c = hermite_gauss_product(j, k, theta, kappa);
                        let (v, a) =
                            quad1(|y| hermite(j, y) * hermite(k, y) * (-y * y - theta * (y - kappa).powi(2)).exp())?;
                        agg.add(c, v, a);
                    }
                }
            }
        }
        Ok(agg.result(1e-8))
    });
    r.push(s, "Hermite-Gaussian product vanishes at kappa = 0 for odd j + k", || {
        let mut bad = 0;
        let mut n = 0;
        for theta in [0.25, 1.0, 2.0] {
            for j in 0..=40 {
                for k in 0..=40 {
                    if (j + k) % 2 == 1 {
                        n += 1;
                        if hermite_gauss_product(j, k, theta, 0.0) != 0.0 {
                            bad += 1;
                        }
                    }
                }
            }
        }
        Ok((verdict(bad == 0), format!("{bad} nonzero of {n}")))
    });
    r.push(s, "scale-and-shift expansion of H_k", || {
        let mut worst: f64 = 0.0;
        for k in 0..=20 {
            for &(g, x, y) in &[(0.3, 0.8, -1.3), (0.7, -0.4, 0.9), (0.95, 1.5, 0.2)] {
                let direct = hermite(k, g * (x + y));
                let v = hermite_scale_shift(k, g, x, y)?;
                let scale = (2f64.powi(k as i32) * (1..=k).map(|i| i as f64).product::<f64>()).sqrt();
                worst = worst.max((v - direct).abs() / direct.abs().max(scale * 1e-6).max(1.0));
            }
        }
        Ok((verdict(worst < 1e-10), format!("worst rel err {}", fmt_num(worst))))
    });
    r.push(s, "ladder derivative against central differences", || {
        let ctx = HermiteContext::new(CTX_DRAWS[0].0, CTX_DRAWS[0].1, 2)?;
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in MultiIndex::all_up_to(2, 6) {
            for z in [[0.1, -0.3], [0.7, 0.4], [-1.2, 0.05]] {
                for i in 0..2 {
                    let mut zp = z;
                    let mut zm = z;
                    zp[i] += h;
                    zm[i] -= h;
                    let fd = (gamma_k(&k, &zp, &ctx) - gamma_k(&k, &zm, &ctx)) / (2.0 * h);
                    worst = worst.max((gamma_k_derivative(i, &k, &z, &ctx) - fd).abs());
                }
            }
        }
        Ok((verdict(worst < 1e-7), format!("max abs diff {}", fmt_num(worst))))
    });
    r.push(s, "uniform Cramer bound, k <= 200", || {
        // hermite_function is |H_k(x)| e^{−x²/2}/√(2^k k!); sample past the turning point.
        let c = 1.0;
        let mut worst: f64 = 0.0;
        for k in 0..=200 {
            let reach = (2.0 * k as f64 + 1.0).sqrt() + 4.0;
            for i in 0..1000 {
                let x = -reach + 2.0 * reach * (i as f64 + 0.5) / 1000.0;
                worst = worst.max(c * hermite_function(k, x).abs());
            }
            worst = worst.max(c * hermite_function(k, 0.0).abs());
        }
        Ok((verdict(worst <= 1.0 + 1e-12), format!("max ratio {}", fmt_num(worst))))
    });
    r.push(s, "local refined Cramer bound on |x| <= 2, k <= 200", || {
        let c = 1.0;
        let mut worst: f64 = 0.0;
        for k in 0..=200 {
            let gain = (k as f64).powf(0.25).max(1.0);
            for i in 0..=400 {
                let x = -2.0 + 4.0 * i as f64 / 400.0;
                worst = worst.max(c * hermite_function(k, x).abs() * gain);
            }
        }
        Ok((verdict(worst <= 1.1), format!("max ratio {} (bound 1.1)", fmt_num(worst))))
    });
    r.push(s, "sup norm of the basis grows at most like k^(1/4), sigma <= 40", || {
        // The constant is existential, so the check is that sup Γ_k / max(1,k)^{1/4}
        // never exceeds its k = 0 value. 1D basis; the 2D sup is a product.
        let ctx = HermiteContext::new(CTX_DRAWS[0].0, CTX_DRAWS[0].1, 1)?;
        let a = ctx.scale();
        let sup = |k: usize| {
            let reach = (2.0 * k as f64 + 1.0).sqrt() + 3.0;
            (0..=4000)
                .map(|i| gamma_k(&MultiIndex::new(&[k]), &[(-reach + 2.0 * reach * i as f64 / 4000.0) / a], &ctx).abs())
                .fold(0.0, f64::max)
        };
        let base = sup(0);
        let ratios: Vec<f64> = (0..=40).map(|k| sup(k) / (k as f64).powf(0.25).max(1.0) / base).collect();
        let max = ratios.iter().copied().fold(0.0, f64::max);
        Ok((verdict(max <= 1.0 + 1e-9), format!("max ratio to k=0 {}, at k=40 {}", fmt_num(max), fmt_num(ratios[40]))))
    });
}

// ------------------------------------------------------------- stationary

fn stationary_params() -> Result<ModelParams> {
    ModelParams::reference().with_alpha_h(0.5)
}

fn stationary_suite(r: &mut SuiteReport) {
    let s = Suite::Stationary;
    r.push(s, "existence threshold R_P = n mu_P alpha_P", || {
        let p = stationary_params()?;
        let a_crit = p.r_p() / (p.n() as f64 * p.mu_p());
        let below = p.with_alpha_p(0.99 * a_crit)?;
        let above = p.with_alpha_p(1.01 * a_crit)?;
        let rejected = matches!(psi_stationary(&above), Err(Error::NoStationary(_)));
        let ok = stationary_exists(&below) && !stationary_exists(&above) && rejected;
        Ok((verdict(ok), format!("critical alpha_P = {}", fmt_num(a_crit))))
    });
    r.push(s, "pathogen profile has unit mass and variance mu_P/alpha_P", || {
        let p = stationary_params()?;
        let g = psi_stationary(&p)?;
        let mass = integrate_adaptive2(|x, y| g.density(&[x, y]), 1e-11)?;
        let var = integrate_adaptive2(|x, y| x * x * g.density(&[x, y]), 1e-11)?;
        let ev = p.mu_p() / p.alpha_p();
        let ok = (mass - 1.0).abs() < 1e-9 && (var - ev).abs() < 1e-9 * ev;
        Ok((verdict(ok), format!("mass {} variance {} (expected {})", fmt_num(mass), fmt_num(var), fmt_num(ev))))
    });
    r.push(s, "principal eigenvalue at P = 0 equals R_H - n mu_H alpha_H", || {
        let p = stationary_params()?;
        let op = HostOperator::new(&p, default_grid(&p, 256)?)?;
        let l0 = op.lambda(0.0)?;
        let expect = p.r_h() - p.n() as f64 * p.mu_h() * p.alpha_h();
        Ok((verdict((l0 - expect).abs() < 1e-4), format!("lambda_0 = {} expected {}", fmt_num(l0), fmt_num(expect))))
    });
    r.push(s, "principal eigenvalue decreases in P", || {
        let p = stationary_params()?;
        let op = HostOperator::new(&p, default_grid(&p, 64)?)?;
        let ps = [0.0, 20.0, 50.0, 100.0, 200.0];
        let ls: Vec<f64> = ps.iter().map(|&pm| op.lambda(pm)).collect::<Result<_>>()?;
        let ok = ls.windows(2).all(|w| w[1] < w[0]);
        Ok((verdict(ok), format!("lambda at P = 0,20,50,100,200: {}", ls.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(" "))))
    });
    // The refinement ladder feeds several rows.
    let p = match stationary_params() {
        Ok(p) => p,
        Err(e) => {
            r.push(s, "stationary solve", || Err(e));
            return;
        }
    };
    let ladder: Vec<Result<_>> = [64usize, 128, 256]
        .iter()
        .map(|&m| {
            let st = solve_stationary_on(&p, default_grid(&p, m)?)?;
            let res = stationary_residual(&st, &p);
            Ok((m, st, res))
        })
        .collect();
    if let Some(Err(e)) = ladder.iter().find(|x| x.is_err()) {
        let msg = e.to_string();
        r.push(s, "stationary solve", || Err(Error::Numeric(msg)));
        return;
    }
    let ladder: Vec<_> = ladder.into_iter().map(|x| x.unwrap()).collect();
    let (_, fine, fine_res) = &ladder[2];
    r.push(s, "mass relation R_P - gamma_P P/H = n mu_P alpha_P", || {
        Ok((verdict(fine_res.relation.abs() < 1e-10), format!("residual {}", fmt_num(fine_res.relation))))
    });
    r.push(s, "host equation residual at m = 256", || {
        Ok((verdict(fine_res.host < 1e-4), format!("sup residual {} (tol 1e-4)", fmt_num(fine_res.host))))
    });
    r.push(s, "host residual order under refinement", || {
        let x: Vec<f64> = ladder.iter().map(|(m, _, _)| (*m as f64).ln()).collect();
        let y: Vec<f64> = ladder.iter().map(|(_, _, res)| res.host.ln()).collect();
        let order = -least_squares_slope(&x, &y);
        Ok((verdict(order >= 1.8), format!("fitted order {} over m = 64,128,256", fmt_num(order))))
    });
    r.push(s, "host profile is symmetric under swapping axes", || {
        let g = fine.phi.grid();
        let m = g.m()[0];
        let v = fine.phi.values();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                worst = worst.max((v[i * m + j] - v[j * m + i]).abs());
            }
        }
        let rel = worst / fine.phi.max();
        Ok((verdict(rel < 1e-6), format!("max relative asymmetry {}", fmt_num(rel))))
    });
    let mut csv = String::from("m,h_mass,p_mass,lambda,host_residual,pathogen_residual,relation_residual\n");
    for (m, st, res) in &ladder {
        csv.push_str(&format!(
            "{m},{},{},{},{},{},{}\n",
            fmt_num(st.h_mass),
            fmt_num(st.p_mass),
            fmt_num(st.lambda),
            fmt_num(res.host),
            fmt_num(res.pathogen),
            fmt_num(res.relation)
        ));
    }
    r.artifact("stationary_refinement.csv", csv);
    if let Ok(js) = serde_json::to_string_pretty(&fine.export(&p)) {
        r.artifact("stationary_state.json", js + "\n");
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------- pursuit

/// Parameters satisfying every condition of the small-ε existence result.
pub fn admissible_pursuit_params() -> Result<ModelParams> {
    ModelParams::reference().with_beta(2.0)?.with_ell(0.05)
}

/// Random finitely supported right-hand side with σ ≤ 6.
fn random_rhs(rng: &mut ChaCha8Rng, n: usize) -> Result<(CoefficientMap, f64, f64)> {
    let mut f = CoefficientMap::new();
    for k in MultiIndex::all_up_to(n, 6) {
        if rng.random_bool(0.6) {
            f.insert(k, rng.random_range(-1.0..1.0))?;
        }
    }
    Ok((f, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn pursuit_suite(r: &mut SuiteReport) {
    let s = Suite::Pursuit;
    r.push(s, "pathogen profile in the moving frame has unit mass and mean -l u", || {
        let p = ModelParams::reference().with_beta(1.0)?.with_ell(0.05)?;
        let mut worst: f64 = 0.0;
        for c in [0.0, 0.3, 1.0] {
            let psi = pursuit_psi(c, &p)?;
            let mass = integrate_adaptive2(|x, y| psi.density(&[x, y]), 1e-11)?;
            let mean = integrate_adaptive2(|x, y| x * psi.density(&[x, y]), 1e-11)?;
            worst = worst.max((mass - 1.0).abs()).max((mean + p.ell()).abs());
        }
        Ok((verdict(worst < 1e-8), format!("max deviation {}", fmt_num(worst))))
    });
    r.push(s, "pathogen profile at c = 0 reduces to the stationary one", || {
        let p = stationary_params()?;
        let a = pursuit_psi(0.0, &p)?;
        let b = psi_stationary(&p)?;
        let worst = [[0.0, 0.0], [0.3, -0.2], [1.0, 0.5]]
            .iter()
            .map(|z| (a.density(z) - b.density(z)).abs())
            .fold(0.0, f64::max);
        Ok((verdict(worst < 1e-14), format!("max diff {}", fmt_num(worst))))
    });
    r.push(s, "mass relation P = H (R_P - n mu_P alpha_P - c^2/(4 mu_P^2)) / gamma_P", || {
        let p = ModelParams::reference();
        let (c, h) = (0.1, 3.0);
        let pm = relation3_p(c, h, &p)?;
        let expect = h * (p.r_p() - 2.0 * p.mu_p() * p.alpha_p() - c * c / (4.0 * p.mu_p2())) / p.gamma_p();
        Ok((verdict((pm - expect).abs() < 1e-12 * expect), format!("P = {}", fmt_num(pm))))
    });
    r.push(s, "unperturbed host mass H0 = (R_H - n mu_H beta)/gamma_H", || {
        let p = admissible_pursuit_params()?;
        let h = unperturbed_host(&p)?;
        let expect = (p.r_h() - 2.0 * p.mu_h() * p.beta()) / p.gamma_h();
        Ok((verdict((h.h0 - expect).abs() < 1e-12), format!("H0 = {}", fmt_num(h.h0))))
    });
    r.push(s, "linearized inverse round trip, 100 random inputs", || {
        let p = admissible_pursuit_params()?;
        let lin = Linearized::new(&p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let (f, h, rr) = random_rhs(&mut rng, 2)?;
            let sol = lin.inverse(&f, h, rr)?;
            let (f2, h2, r2) = lin.forward(sol.c, &sol.phi, sol.eta)?;
            worst = worst.max(f.max_abs_diff(&f2)).max((h - h2).abs()).max((rr - r2).abs());
        }
        Ok((verdict(worst < 1e-8), format!("max abs error {}", fmt_num(worst))))
    });
    r.push(s, "first-order response signs under the existence conditions", || {
        let p = admissible_pursuit_params()?;
        let bad = pursuit_conditions(&p);
        if !bad.is_empty() {
            return Err(Error::Precondition(bad.join("; ")));
        }
        let resp = first_order_response(&p, 60)?;
        let ok = resp.deta_deps < 0.0 && resp.dc_deps > 0.0 && resp.existence_conditions_hold;
        Ok((verdict(ok), format!("dc/deps = {} deta/deps = {}", fmt_num(resp.dc_deps), fmt_num(resp.deta_deps))))
    });
    r.push(s, "first-order speed vanishes at l = 0", || {
        let p = admissible_pursuit_params()?.with_ell(0.0)?;
        let resp = first_order_response(&p, 60)?;
        Ok((verdict(resp.dc_deps.abs() < 1e-14), format!("dc/deps = {}", fmt_num(resp.dc_deps))))
    });
    r.push(s, "existence conditions reported at beta = 1", || {
        let p = ModelParams::reference().with_beta(1.0)?.with_ell(0.05)?;
        let bad = pursuit_conditions(&p);
        Ok((Status::Info, if bad.is_empty() { "all hold".into() } else { bad.join("; ") }))
    });
    r.push(s, "coefficient inequality g(j) > S(j) for sigma <= 10 under its condition", || {
        let lambda = 0.3f64.sqrt();
        if !claim_condition_holds(2, lambda) {
            return Err(Error::Precondition("condition fails at lambda^2 = 0.3".into()));
        }
        let rep = verify_claim(2, lambda, 10);
        Ok((verdict(rep.holds), format!("{} indices, worst ratio {}", rep.tested, fmt_num(rep.worst_ratio))))
    });
    r.push(s, "coefficient inequality fails beyond its condition", || {
        let lambda = 0.9f64.sqrt();
        let rep = verify_claim(2, lambda, 10);
        let ok = !claim_condition_holds(2, lambda) && !rep.holds;
        let at = rep.first_failure.as_ref().map(|j| format!("{j:?}")).unwrap_or_else(|| "none".into());
        Ok((verdict(ok), format!("first failure at {at}")))
    });
    r.push(s, "alpha_0 series against the one-dimensional closed form", || {
        let mut worst: f64 = 0.0;
        for l2 in [0.1, 0.3, 0.5] {
            let lambda: f64 = f64::sqrt(l2);
            let a = alpha0(1, lambda)?;
            let exact = lambda / (2.0 * (1.0 + l2).sqrt());
            worst = worst.max((a.value - exact).abs() / exact);
        }
        Ok((verdict(worst < 1e-10), format!("worst rel err {}", fmt_num(worst))))
    });
    if let Ok(p) = admissible_pursuit_params().and_then(|p| p.with_rho_max(0.01)) {
        if let Ok((pulse, resp)) = PursuitPulse::first_order(&p, 60) {
            let doc = serde_json::json!({ "params": p, "pulse": pulse.export(&p), "response": resp });
            if let Ok(js) = serde_json::to_string_pretty(&doc) {
                r.artifact("pursuit_first_order.json", js + "\n");
            }
        }
    }
}

// ----------------------------------------------------------------- series

/// Summary of a bound experiment without its per-k rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub exponent: f64,
    pub k_max: usize,
    pub sup: f64,
    pub argsup: usize,
    pub last_decade_max: f64,
    pub trend_slope: f64,
    pub middle_band_constant: f64,
    pub middle_band_spread: f64,
    pub bounded: bool,
    pub evidence_only: bool,
}

impl From<&BoundReport> for BoundSummary {
    fn from(r: &BoundReport) -> Self {
        BoundSummary {
            exponent: r.exponent,
            k_max: r.k_max,
            sup: r.sup,
            argsup: r.argsup,
            last_decade_max: r.last_decade_max,
            trend_slope: r.trend_slope,
            middle_band_constant: r.middle_band_constant,
            middle_band_spread: r.middle_band_spread,
            bounded: r.bounded,
            evidence_only: r.evidence_only,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub params: SeriesParams,
    pub geometric_rate: f64,
    pub limsup: Option<BoundSummary>,
    pub parts: Option<PartBoundReport>,
    pub conjecture_n3: Option<BoundSummary>,
    /// b values scanned with k ≤ min(k_max, 200) and whether each was bounded.
    pub b_scan: Vec<(f64, bool)>,
    pub smallest_bounded_b: Option<f64>,
}

fn series_suite(r: &mut SuiteReport, opts: &VerifyOptions) {
    let s = Suite::Series;
    r.push(s, "binomial inequality, exhaustive j,k <= 60", || {
        let mut n = 0usize;
        let mut bad = Vec::new();
        for j in 0..=60 {
            for k in 0..=60 {
                for l in 0..=j.min(k) {
                    n += 1;
                    if !binom_inequality(j, k, l)? {
                        bad.push((j, k, l));
                    }
                }
            }
        }
        Ok((verdict(bad.is_empty()), format!("{} triples, {} violations", n, bad.len())))
    });
    let sp = match SeriesParams::new(opts.theta_bar, opts.b, 2) {
        Ok(sp) => sp,
        Err(e) => {
            let msg = e.to_string();
            r.push(s, "series parameters", || Err(Error::Config(msg)));
            return;
        }
    };
    let hyp = || -> Result<()> {
        if sp.within_hypothesis() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "theta_bar = {} is not below sqrt(5) - 2 = {}",
                sp.theta_bar,
                theta_bar_limit()
            )))
        }
    };
    r.push(s, "terms are dominated by the undamped majorant, j,k <= 100", || {
        let mut worst: f64 = 0.0;
        for j in (0..=100).step_by(5) {
            for k in (0..=100).step_by(5) {
                worst = worst.max(gamma_jk(j, k, &sp) / gamma_tilde(j, k, &sp));
            }
        }
        Ok((verdict(worst <= 1.0 + 1e-12), format!("max ratio {}", fmt_num(worst))))
    });
    r.push(s, "Cauchy-Schwarz step on the l-sum, 500 random (j,k)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst = f64::INFINITY;
        for _ in 0..500 {
            let j = rng.random_range(1..400);
            let k = rng.random_range(1..400);
            worst = worst.min(cauchy_schwarz_slack(j, k, sp.theta_bar));
        }
        Ok((verdict(worst >= -1e-12), format!("min relative slack {}", fmt_num(worst))))
    });

    let mut summary = SeriesSummary {
        params: sp,
        geometric_rate: sp.geometric_rate(),
        limsup: None,
        parts: None,
        conjecture_n3: None,
        b_scan: vec![],
        smallest_bounded_b: None,
    };
    let mut limsup_csv: Option<String> = None;
    let mut conj_csv: Option<String> = None;
    let sums = if sp.within_hypothesis() { gamma_sums(&sp, opts.k_max) } else { Err(Error::Precondition(String::new())) };
    r.push(s, &format!("scaled sum (1+k)^(b-1/2) sum_j gamma_j^k bounded for k <= {}", opts.k_max), || {
        hyp()?;
        let sums = sums.as_ref().map_err(|e| Error::Numeric(e.to_string()))?;
        let rep = report_for_exponent(&sp, sums, sp.b - 0.5, false);
        let ok = rep.bounded && rep.last_decade_max <= rep.sup;
        let detail = format!(
            "sup {} at k={}, last-decade max {}, trend slope {}",
            fmt_num(rep.sup),
            rep.argsup,
            fmt_num(rep.last_decade_max),
            fmt_num(rep.trend_slope)
        );
        summary.limsup = Some(BoundSummary::from(&rep));
        limsup_csv = Some(rep.to_csv());
        Ok((verdict(ok), detail))
    });
    r.push(s, "outer partial sums dominated by the geometric rate, k in [50, 500]", || {
        hyp()?;
        let rep = verify_part_bounds(&sp, 50, 500)?;
        let detail = format!(
            "q = {}, observed rates {} / {}, worst ratios {} / {}",
            fmt_num(rep.geometric_rate),
            fmt_num(rep.observed_rate_i),
            fmt_num(rep.observed_rate_ii),
            fmt_num(rep.worst_ratio_i),
            fmt_num(rep.worst_ratio_ii)
        );
        let ok = rep.dominated;
        summary.parts = Some(rep);
        Ok((verdict(ok), detail))
    });
    r.push(s, "conjectured exponent b - 1/n for n = 3 (evidence)", || {
        hyp()?;
        let sp3 = SeriesParams { n: 3, ..sp };
        let sums = sums.as_ref().map_err(|e| Error::Numeric(e.to_string()))?;
        let rep = report_for_exponent(&sp3, sums, sp.b - 1.0 / 3.0, true);
        let detail = format!("sup {}, trend slope {}, bounded {}", fmt_num(rep.sup), fmt_num(rep.trend_slope), rep.bounded);
        summary.conjecture_n3 = Some(BoundSummary::from(&rep));
        conj_csv = Some(rep.to_csv());
        Ok((Status::Info, detail))
    });
    r.push(s, "smallest scanned b with a bounded scaled sum", || {
        hyp()?;
        let k_scan = opts.k_max.min(200);
        for b in [0.5, 1.0, 2.0, 3.0, 4.0, 5.0] {
            let spb = SeriesParams { b, ..sp };
            let rep = report_for_exponent(&spb, &gamma_sums(&spb, k_scan)?, b - 0.5, false);
            summary.b_scan.push((b, rep.bounded));
        }
        summary.smallest_bounded_b = summary.b_scan.iter().find(|x| x.1).map(|x| x.0);
        let list: Vec<String> = summary.b_scan.iter().map(|(b, ok)| format!("b={b}:{ok}")).collect();
        Ok((Status::Info, format!("k <= {k_scan}: {}", list.join(" "))))
    });
    if let Some(csv) = limsup_csv {
        r.artifact("series_limsup.csv", csv);
    }
    if let Some(csv) = conj_csv {
        r.artifact("series_conjecture_n3.csv", csv);
    }
    if let Ok(js) = serde_json::to_string_pretty(&summary) {
        r.artifact("series_summary.json", js + "\n");
    }
}
