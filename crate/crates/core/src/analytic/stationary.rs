//! Stationary state of the model without concerted evolution (β = 0, ℓ = 0).
//!
//! The pathogen profile is an explicit Gaussian and fixes H as a linear
//! function of P. The host profile is the principal eigenfunction of
//! μ_H²Δ + R_H − γ_H H(P) − α_H²‖x‖² − Pρ_max e^{−θ‖x‖²}; the pathogen mass
//! is the unique root of the principal eigenvalue λ_P, which decreases in P.

use serde::{Deserialize, Serialize};

use super::GaussianProfile;
use crate::eigen::{lobpcg_smallest, EigenPair, SeparableInverse};
use crate::error::{Error, Result};
use crate::grid::{laplacian4, laplacian_into, moments_of, Field, Grid};
use crate::model::ModelParams;
use crate::tolerances::{EIGEN_RESIDUAL_TOL, STATIONARY_LAMBDA_TOL};

/// R_P > nμ_Pα_P and R_H > nμ_Hα_H.
pub fn stationary_exists(p: &ModelParams) -> bool {
    let n = p.n() as f64;
    p.r_p() > n * p.mu_p() * p.alpha_p() && p.r_h() > n * p.mu_h() * p.alpha_h()
}

fn require_exists(p: &ModelParams) -> Result<()> {
    if !stationary_exists(p) {
        let n = p.n() as f64;
        return Err(Error::NoStationary(format!(
            "need R_P > n mu_P alpha_P ({} vs {}) and R_H > n mu_H alpha_H ({} vs {})",
            p.r_p(),
            n * p.mu_p() * p.alpha_p(),
            p.r_h(),
            n * p.mu_h() * p.alpha_h()
        )));
    }
    Ok(())
}

/// Pathogen profile: centered Gaussian with variance μ_P/α_P, mass 1.
pub fn psi_stationary(p: &ModelParams) -> Result<GaussianProfile> {
    require_exists(p)?;
    if !(p.alpha_p() > 0.0) {
        return Err(Error::NoStationary("alpha_P = 0 leaves the pathogen profile unnormalizable".into()));
    }
    Ok(GaussianProfile { center: vec![0.0; p.n()], variance: p.mu_p() / p.alpha_p(), mass: 1.0 })
}

/// Host mass paired with pathogen mass `pm`: H(P) = γ_P P/(R_P − nμ_Pα_P).
pub fn host_mass_for(pm: f64, p: &ModelParams) -> Result<f64> {
    require_exists(p)?;
    Ok(p.gamma_p() * pm / (p.r_p() - p.n() as f64 * p.mu_p() * p.alpha_p()))
}

/// Default box for the eigenproblem: 8 stds of the wider of the two
/// closed-form Gaussians (host at P = 0, pathogen).
pub fn default_grid(p: &ModelParams, m: usize) -> Result<Grid> {
    let mut s: f64 = 0.0;
    if p.alpha_h() > 0.0 {
        s = s.max((p.mu_h() / p.alpha_h()).sqrt());
    }
    if p.alpha_p() > 0.0 {
        s = s.max((p.mu_p() / p.alpha_p()).sqrt());
    }
    if !(s > 0.0) {
        return Err(Error::NoStationary("no confining selection: alpha_H = alpha_P = 0".into()));
    }
    Grid::cube(p.n(), crate::tolerances::BOX_STDS_ANALYTIC * s, m)
}

/// Discretized family of host operators indexed by P.
pub struct HostOperator {
    grid: Grid,
    params: ModelParams,
    pre: SeparableInverse,
    kernel: Vec<f64>,
    r2: Vec<f64>,
    seed: Vec<f64>,
}

impl HostOperator {
    pub fn new(p: &ModelParams, grid: Grid) -> Result<Self> {
        require_exists(p)?;
        if p.beta() != 0.0 || p.ell() != 0.0 {
            return Err(Error::Precondition("the stationary problem is posed for beta = 0 and ell = 0".into()));
        }
        let a2 = p.alpha_h() * p.alpha_h();
        let (_, lam) = SeparableInverse::factors(&grid, p.mu_h2(), a2);
        let top: f64 = lam.iter().map(|l| l.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum();
        let gap = lam
            .iter()
            .map(|l| {
                let mut s = l.clone();
                s.sort_by(|a, b| b.total_cmp(a));
                s[0] - s[1]
            })
            .fold(f64::INFINITY, f64::min);
        let pre = SeparableInverse::new(&grid, p.mu_h2(), a2, top + gap.max(1e-3))?;
        let theta = p.theta();
        let kernel = (0..grid.len())
            .map(|i| {
                let z = grid.point(i);
                (-theta * z.iter().map(|x| x * x).sum::<f64>()).exp()
            })
            .collect();
        let r2 = (0..grid.len()).map(|i| grid.point(i).iter().map(|x| x * x).sum()).collect();
        // Seed: the separable ground state (exact at P = 0).
        let seed = {
            let mut s = vec![1.0; grid.len()];
            let mut out = vec![0.0; grid.len()];
            for _ in 0..3 {
                pre.apply(&s, &mut out);
                let nn = out.iter().map(|v| v * v).sum::<f64>().sqrt();
                s = out.iter().map(|v| v / nn).collect();
            }
            s
        };
        Ok(HostOperator { grid, params: p.clone(), pre, kernel, r2, seed })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Potential R_H − γ_H H(P) − α_H²‖x‖² − Pρ_max e^{−θ‖x‖²} at every node.
    pub fn potential(&self, pm: f64) -> Result<Vec<f64>> {
        let p = &self.params;
        let c0 = p.r_h() - p.gamma_h() * host_mass_for(pm, p)?;
        let a2 = p.alpha_h() * p.alpha_h();
        Ok(self.kernel.iter().zip(&self.r2).map(|(k, r2)| c0 - a2 * r2 - pm * p.rho_max() * k).collect())
    }

    /// Principal eigenpair at pathogen mass `pm`, warm-started from `start`.
    pub fn principal(&self, pm: f64, start: Option<&[f64]>) -> Result<EigenPair> {
        if !(pm >= 0.0) {
            return Err(Error::Domain(format!("P must be >= 0, got {pm}")));
        }
        let v = self.potential(pm)?;
        let g = &self.grid;
        let mu2 = self.params.mu_h2();
        let apply = |x: &[f64], out: &mut [f64]| {
            laplacian_into(g, x, out);
            for i in 0..x.len() {
                out[i] = -(mu2 * out[i] + v[i] * x[i]);
            }
        };
        // K = −A differs from −A_sep by a constant and the bounded kernel term,
        // so the separable inverse with the shift folded in stays SPD.
        let pre = |r: &[f64], out: &mut [f64]| self.pre.apply(r, out);
        let x0 = start.unwrap_or(&self.seed);
        let mut e = lobpcg_smallest(apply, pre, x0, EIGEN_RESIDUAL_TOL, 2000)?;
        e.value = -e.value;
        if e.vector.iter().sum::<f64>() < 0.0 {
            e.vector.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(e)
    }

    /// λ_P.
    pub fn lambda(&self, pm: f64) -> Result<f64> {
        Ok(self.principal(pm, None)?.value)
    }
}

/// Principal eigenvalue λ_P on the default 256-node grid.
pub fn lambda_p(pm: f64, p: &ModelParams) -> Result<f64> {
    HostOperator::new(p, default_grid(p, 256)?)?.lambda(pm)
}

/// Stationary quadruple (H, P, φ, ψ).
#[derive(Debug, Clone)]
pub struct StationaryState {
    pub h_mass: f64,
    pub p_mass: f64,
    /// Host profile, trapezoid mass 1.
    pub phi: Field,
    pub psi: GaussianProfile,
    /// λ_P at the returned P.
    pub lambda: f64,
    pub root_iterations: usize,
}

/// Solves for P with λ_P = 0 on the default 256-node grid.
pub fn solve_stationary(p: &ModelParams) -> Result<StationaryState> {
    solve_stationary_on(p, default_grid(p, 256)?)
}

/// Solves for P with λ_P = 0 on `grid`: doubling bracket, then
/// Illinois-accelerated regula falsi on the monotone function λ_P.
pub fn solve_stationary_on(p: &ModelParams, grid: Grid) -> Result<StationaryState> {
    let psi = psi_stationary(p)?;
    let op = HostOperator::new(p, grid)?;
    let e0 = op.principal(0.0, None)?;
    if e0.value <= 0.0 {
        return Err(Error::NoStationary(format!("lambda_0 = {} is not positive on this grid", e0.value)));
    }
    let (mut a, mut fa) = (0.0, e0.value);
    let mut va = e0.vector.clone();
    let mut b = 1.0;
    let mut eb = op.principal(b, Some(&va))?;
    let mut doublings = 0;
    while eb.value > 0.0 {
        a = b;
        fa = eb.value;
        va = eb.vector.clone();
        b *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Numeric(format!("no sign change of lambda_P up to P = {b}")));
        }
        eb = op.principal(b, Some(&va))?;
    }
    let mut fb = eb.value;
    let mut vb = eb.vector;
    let mut side = 0i8;
    for it in 0..200 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let start = if fa.abs() < fb.abs() { &va } else { &vb };
        let ec = op.principal(c, Some(start))?;
        let fc = ec.value;
        if fc.abs() < STATIONARY_LAMBDA_TOL {
            return finish(p, &op, c, ec, psi, doublings + it + 1);
        }
        if fc > 0.0 {
            a = c;
            fa = fc;
            va = ec.vector;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            vb = ec.vector;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
        if (b - a) <= 1e-15 * b {
            break;
        }
    }
    Err(Error::Numeric(format!("root of lambda_P not resolved in [{a}, {b}]")))
}

fn finish(
    p: &ModelParams,
    op: &HostOperator,
    pm: f64,
    e: EigenPair,
    psi: GaussianProfile,
    iters: usize,
) -> Result<StationaryState> {
    let g = op.grid().clone();
    let mass = moments_of(&g, &e.vector).mass;
    let phi = Field::new(g, e.vector.iter().map(|v| v / mass).collect())?;
    Ok(StationaryState { h_mass: host_mass_for(pm, p)?, p_mass: pm, phi, psi, lambda: e.value, root_iterations: iters })
}

/// Sup-norm plug-back residuals of the stationary elliptic system, with the
/// Laplacian taken by the fourth-order stencil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryResidual {
    pub host: f64,
    pub pathogen: f64,
    /// R_P − γ_P P/H − nμ_Pα_P.
    pub relation: f64,
}

pub fn stationary_residual(s: &StationaryState, p: &ModelParams) -> StationaryResidual {
    let g = s.phi.grid();
    let lap = laplacian4(&s.phi);
    let mut host: f64 = 0.0;
    for i in 0..g.len() {
        let z = g.point(i);
        let r2: f64 = z.iter().map(|x| x * x).sum();
        let v = p.r_h() - p.gamma_h() * s.h_mass - p.alpha_h().powi(2) * r2 - s.p_mass * p.rho_max() * (-p.theta() * r2).exp();
        host = host.max((p.mu_h2() * lap.values()[i] + v * s.phi.values()[i]).abs());
    }
    let psi = s.psi.to_field(g);
    let lap_p = laplacian4(&psi);
    let mut path: f64 = 0.0;
    let cp = p.r_p() - p.gamma_p() * s.p_mass / s.h_mass;
    for i in 0..g.len() {
        let r2: f64 = g.point(i).iter().map(|x| x * x).sum();
        let v = cp - p.alpha_p().powi(2) * r2;
        path = path.max((p.mu_p2() * lap_p.values()[i] + v * psi.values()[i]).abs());
    }
    let relation = p.r_p() - p.gamma_p() * s.p_mass / s.h_mass - p.n() as f64 * p.mu_p() * p.alpha_p();
    StationaryResidual { host, pathogen: path, relation }
}

/// JSON descriptor of a stationary state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryExport {
    pub h_mass: f64,
    pub p_mass: f64,
    pub lambda: f64,
    pub psi: GaussianProfile,
    pub phi_grid: Grid,
    pub phi_mass: f64,
    pub phi_mean: Vec<f64>,
    pub phi_peak: f64,
    pub residual: StationaryResidual,
}

impl StationaryState {
    pub fn export(&self, p: &ModelParams) -> StationaryExport {
        let m = moments_of(self.phi.grid(), self.phi.values());
        StationaryExport {
            h_mass: self.h_mass,
            p_mass: self.p_mass,
            lambda: self.lambda,
            psi: self.psi.clone(),
            phi_grid: self.phi.grid().clone(),
            phi_mass: m.mass,
            phi_mean: m.first.iter().map(|x| x / m.mass).collect(),
            phi_peak: self.phi.max(),
            residual: stationary_residual(self, p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stat_params() -> ModelParams {
        ModelParams::reference().with_alpha_h(0.5).unwrap()
    }

    #[test]
    fn existence_threshold() {
        let p = stat_params();
        assert!(stationary_exists(&p));
        let edge = p.with_r_p(2.0 * p.mu_p() * p.alpha_p()).unwrap();
        assert!(!stationary_exists(&edge));
        let free = p.with_alpha_h(0.0).unwrap().with_alpha_p(0.0).unwrap();
        assert!(stationary_exists(&free));
    }

    #[test]
    fn psi_peak_value() {
        let psi = psi_stationary(&stat_params()).unwrap();
        assert!((psi.peak() - 1.0 / (2.0 * std::f64::consts::PI * 0.1f64.sqrt())).abs() < 1e-12);
        assert_eq!(psi.mass, 1.0);
    }

    #[test]
    fn lambda_at_zero_is_oscillator_ground_energy() {
        let p = stat_params().with_dim(1).unwrap();
        let op = HostOperator::new(&p, default_grid(&p, 256).unwrap()).unwrap();
        let l0 = op.lambda(0.0).unwrap();
        let exact = p.r_h() - p.mu_h() * p.alpha_h();
        assert!((l0 - exact).abs() < 1e-4, "{l0} vs {exact}");
    }

    #[test]
    fn lambda_decreases() {
        let p = stat_params().with_dim(1).unwrap();
        let op = HostOperator::new(&p, default_grid(&p, 128).unwrap()).unwrap();
        let vals: Vec<f64> = [0.0, 1.0, 5.0, 20.0, 100.0].iter().map(|&x| op.lambda(x).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    }

    #[test]
    fn solve_1d_satisfies_relation() {
        let p = stat_params().with_dim(1).unwrap();
        let s = solve_stationary_on(&p, default_grid(&p, 128).unwrap()).unwrap();
        let r = stationary_residual(&s, &p);
        assert!(r.relation.abs() < 1e-10);
        assert!(s.lambda.abs() < STATIONARY_LAMBDA_TOL);
    }

    #[test]
    fn rejects_out_of_scope() {
        let p = stat_params().with_beta(1.0).unwrap();
        assert!(matches!(HostOperator::new(&p, default_grid(&p, 32).unwrap()), Err(Error::Precondition(_))));
        let q = stat_params().with_r_p(0.1).unwrap();
        assert!(matches!(psi_stationary(&q), Err(Error::NoStationary(_))));
    }
}
