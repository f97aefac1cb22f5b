//! Model constants, fitness and impact functions, and the reduced
//! host-pathogen mass dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rk4::Rk4;

/// All constants of the structured host-pathogen system.
///
/// Mutation intensities are stored squared, as they appear in front of the
/// Laplacians; use [`ModelParams::mu_h`] and [`ModelParams::mu_p`] for the
/// square roots. The direction `u` is normalized on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    n: usize,
    mu_h2: f64,
    mu_p2: f64,
    r_h: f64,
    r_p: f64,
    gamma_h: f64,
    gamma_p: f64,
    rho_max: f64,
    theta: f64,
    alpha_h: f64,
    alpha_p: f64,
    beta: f64,
    ell: f64,
    u: Vec<f64>,
}

/// Unvalidated mirror of [`ModelParams`] used for (de)serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub n: usize,
    pub mu_h2: f64,
    pub mu_p2: f64,
    pub r_h: f64,
    pub r_p: f64,
    pub gamma_h: f64,
    pub gamma_p: f64,
    pub rho_max: f64,
    pub theta: f64,
    pub alpha_h: f64,
    pub alpha_p: f64,
    pub beta: f64,
    pub ell: f64,
    pub u: Vec<f64>,
}

impl Default for RawParams {
    fn default() -> Self {
        ModelParams::reference().into()
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            n: p.n,
            mu_h2: p.mu_h2,
            mu_p2: p.mu_p2,
            r_h: p.r_h,
            r_p: p.r_p,
            gamma_h: p.gamma_h,
            gamma_p: p.gamma_p,
            rho_max: p.rho_max,
            theta: p.theta,
            alpha_h: p.alpha_h,
            alpha_p: p.alpha_p,
            beta: p.beta,
            ell: p.ell,
            u: p.u,
        }
    }
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        if r.n != 1 && r.n != 2 {
            return Err(Error::Domain(format!("n must be 1 or 2, got {}", r.n)));
        }
        let named = [
            ("mu_h2", r.mu_h2),
            ("mu_p2", r.mu_p2),
            ("r_h", r.r_h),
            ("r_p", r.r_p),
            ("gamma_h", r.gamma_h),
            ("gamma_p", r.gamma_p),
            ("rho_max", r.rho_max),
            ("theta", r.theta),
            ("alpha_h", r.alpha_h),
            ("alpha_p", r.alpha_p),
            ("beta", r.beta),
            ("ell", r.ell),
        ];
        for (name, v) in named {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if r.mu_h2 <= 0.0 || r.mu_p2 <= 0.0 {
            return Err(Error::Domain("mu_h2 and mu_p2 must be > 0".into()));
        }
        if r.u.len() != r.n {
            return Err(Error::Domain(format!("u has {} components, expected {}", r.u.len(), r.n)));
        }
        let norm = r.u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Domain("u must be a nonzero finite vector".into()));
        }
        let mut u: Vec<f64> = r.u.iter().map(|x| x / norm).collect();
        // Axis-aligned inputs stay exactly axis-aligned.
        for x in u.iter_mut() {
            if x.abs() == 1.0 {
                *x = x.signum();
            }
        }
        Ok(ModelParams {
            n: r.n,
            mu_h2: r.mu_h2,
            mu_p2: r.mu_p2,
            r_h: r.r_h,
            r_p: r.r_p,
            gamma_h: r.gamma_h,
            gamma_p: r.gamma_p,
            rho_max: r.rho_max,
            theta: r.theta,
            alpha_h: r.alpha_h,
            alpha_p: r.alpha_p,
            beta: r.beta,
            ell: r.ell,
            u,
        })
    }
}

macro_rules! setter {
    ($name:ident, $field:ident) => {
        pub fn $name(&self, v: f64) -> Result<Self> {
            let mut r: RawParams = self.clone().into();
            r.$field = v;
            ModelParams::try_from(r)
        }
    };
}

impl ModelParams {
    /// The constants used in the reference experiments: n = 2, mutation
    /// intensities 0.1, R_H = 4, R_P = 1, γ_H = 1, γ_P = 0.01, ρ_max = 0.1,
    /// θ = 1, α_P = 1, and α_H = β = ℓ = 0 with u = e₁.
    pub fn reference() -> Self {
        ModelParams {
            n: 2,
            mu_h2: 0.1,
            mu_p2: 0.1,
            r_h: 4.0,
            r_p: 1.0,
            gamma_h: 1.0,
            gamma_p: 0.01,
            rho_max: 0.1,
            theta: 1.0,
            alpha_h: 0.0,
            alpha_p: 1.0,
            beta: 0.0,
            ell: 0.0,
            u: vec![1.0, 0.0],
        }
    }

    pub fn from_raw(r: RawParams) -> Result<Self> {
        Self::try_from(r)
    }

    pub fn to_raw(&self) -> RawParams {
        self.clone().into()
    }

    /// Same constants in dimension `n`, with u = e₁.
    pub fn with_dim(&self, n: usize) -> Result<Self> {
        let mut r = self.to_raw();
        r.n = n;
        r.u = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        Self::try_from(r)
    }

    pub fn with_u(&self, u: &[f64]) -> Result<Self> {
        let mut r = self.to_raw();
        r.u = u.to_vec();
        Self::try_from(r)
    }

    setter!(with_mu_h2, mu_h2);
    setter!(with_mu_p2, mu_p2);
    setter!(with_r_h, r_h);
    setter!(with_r_p, r_p);
    setter!(with_gamma_h, gamma_h);
    setter!(with_gamma_p, gamma_p);
    setter!(with_rho_max, rho_max);
    setter!(with_theta, theta);
    setter!(with_alpha_h, alpha_h);
    setter!(with_alpha_p, alpha_p);
    setter!(with_beta, beta);
    setter!(with_ell, ell);

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn mu_h2(&self) -> f64 {
        self.mu_h2
    }
    pub fn mu_p2(&self) -> f64 {
        self.mu_p2
    }
    pub fn mu_h(&self) -> f64 {
        self.mu_h2.sqrt()
    }
    pub fn mu_p(&self) -> f64 {
        self.mu_p2.sqrt()
    }
    pub fn r_h(&self) -> f64 {
        self.r_h
    }
    pub fn r_p(&self) -> f64 {
        self.r_p
    }
    pub fn gamma_h(&self) -> f64 {
        self.gamma_h
    }
    pub fn gamma_p(&self) -> f64 {
        self.gamma_p
    }
    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn alpha_h(&self) -> f64 {
        self.alpha_h
    }
    pub fn alpha_p(&self) -> f64 {
        self.alpha_p
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn ell(&self) -> f64 {
        self.ell
    }
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Pathogen delay τ = 1/(2 μ_P α_P) (infinite when α_P = 0).
    pub fn tau(&self) -> f64 {
        1.0 / (2.0 * self.mu_p() * self.alpha_p)
    }
}

fn norm2(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum()
}

/// Host fitness R_H − α_H²‖x‖² − β²‖x − x̄‖².
pub fn fitness_host(x: &[f64], xbar: &[f64], p: &ModelParams) -> f64 {
    let a = norm2(x.iter().copied());
    let b = norm2(x.iter().zip(xbar).map(|(xi, mi)| xi - mi));
    p.r_h - p.alpha_h * p.alpha_h * a - p.beta * p.beta * b
}

/// Pathogen impact ρ_max·exp(−θ‖x − ȳ‖²) on host phenotype `x`.
pub fn impact(x: &[f64], ybar: &[f64], p: &ModelParams) -> f64 {
    let d = norm2(x.iter().zip(ybar).map(|(xi, yi)| xi - yi));
    p.rho_max * (-p.theta * d).exp()
}

/// Pathogen fitness R_P − α_P²‖y + ℓu − x̄‖²; the optimum sits at x̄ − ℓu.
pub fn fitness_pathogen(y: &[f64], xbar: &[f64], p: &ModelParams) -> f64 {
    let d = norm2(
        y.iter()
            .zip(xbar)
            .zip(&p.u)
            .map(|((yi, xi), ui)| yi + p.ell * ui - xi),
    );
    p.r_p - p.alpha_p * p.alpha_p * d
}

/// Host and pathogen total masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeState {
    pub h: f64,
    pub p: f64,
}

/// Right-hand side of the reduced mass dynamics, with r_H = R_H,
/// r_P = R_P and ρ = ρ_max.
pub fn ode_rhs(s: OdeState, p: &ModelParams) -> Result<(f64, f64)> {
    if !(s.h > 0.0) {
        return Err(Error::Domain(format!("host mass must be > 0, got {}", s.h)));
    }
    let dh = p.r_h * s.h - p.gamma_h * s.h * s.h - p.rho_max * s.h * s.p;
    let dp = p.r_p * s.p - p.gamma_p * s.p * s.p / s.h;
    Ok((dh, dp))
}

/// Coexistence equilibrium of the reduced system.
pub fn ode_equilibrium(p: &ModelParams) -> OdeState {
    let d = p.gamma_h * p.gamma_p + p.rho_max * p.r_p;
    OdeState { h: p.r_h * p.gamma_p / d, p: p.r_h * p.r_p / d }
}

/// Integrates the reduced system to `t_end` with fixed-step RK4.
pub fn integrate_ode(s0: OdeState, t_end: f64, dt: f64, p: &ModelParams) -> Result<OdeState> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Domain("dt must be > 0 and t_end >= 0".into()));
    }
    let steps = (t_end / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut y = [s0.h, s0.p];
    let mut rk = Rk4::new(2);
    for _ in 0..steps {
        rk.step(&mut y, h, |y, dy| {
            let (a, b) = ode_rhs(OdeState { h: y[0], p: y[1] }, p)?;
            dy[0] = a;
            dy[1] = b;
            Ok(())
        })?;
    }
    Ok(OdeState { h: y[0], p: y[1] })
}
