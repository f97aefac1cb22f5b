//! Pursuit pulses: the pathogen profile in the moving frame, the relation
//! between the two masses, and the unperturbed host pulse at ρ_max = 0.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::linearized::{first_order_response, CoefficientMap, FirstOrderResponse};
use super::GaussianProfile;
use crate::error::{Error, Result};
use crate::hermite::{HermiteContext, MultiIndex};
use crate::model::ModelParams;

/// Pathogen profile of a pulse with speed c, written in the pathogen's own
/// moving coordinate w and with the normalization constant K kept explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitPsi {
    pub c: f64,
    pub tau: f64,
    pub k_norm: f64,
    pub mu_p: f64,
    pub alpha_p: f64,
    pub ell: f64,
    pub u: Vec<f64>,
}

impl PursuitPsi {
    /// K e^{−c w·u/(2μ_P²)} e^{−α_P‖w − (cτ − ℓ)u‖²/(2μ_P)}.
    pub fn density(&self, w: &[f64]) -> f64 {
        let (mu, a) = (self.mu_p, self.alpha_p);
        let shift = self.c * self.tau - self.ell;
        let wu: f64 = w.iter().zip(&self.u).map(|(x, u)| x * u).sum();
        let d2: f64 = w.iter().zip(&self.u).map(|(x, u)| (x - shift * u).powi(2)).sum();
        self.k_norm * (-self.c * wu / (2.0 * mu * mu)).exp() * (-a * d2 / (2.0 * mu)).exp()
    }

    /// The same density as a Gaussian: center −ℓu, variance μ_P/α_P, mass 1.
    pub fn profile(&self) -> GaussianProfile {
        GaussianProfile {
            center: self.u.iter().map(|u| -self.ell * u).collect(),
            variance: self.mu_p / self.alpha_p,
            mass: 1.0,
        }
    }
}

/// ψ for speed c, with τ = 1/(2μ_Pα_P) and
/// 1/K = (2πμ_P/α_P)^{n/2} exp(−(cτ − ℓ)c/(2μ_P²) + c²/(8α_Pμ_P³)).
pub fn pursuit_psi(c: f64, p: &ModelParams) -> Result<PursuitPsi> {
    if !(p.alpha_p() > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("need alpha_P > 0 and finite c, got {}, {c}", p.alpha_p())));
    }
    let (mu, a, n) = (p.mu_p(), p.alpha_p(), p.n() as f64);
    let tau = p.tau();
    let ln_kinv = 0.5 * n * (2.0 * PI * mu / a).ln() - (c * tau - p.ell()) * c / (2.0 * mu * mu)
        + c * c / (8.0 * a * mu.powi(3));
    Ok(PursuitPsi { c, tau, k_norm: (-ln_kinv).exp(), mu_p: mu, alpha_p: a, ell: p.ell(), u: p.u().to_vec() })
}

/// P = H (R_P − nμ_Pα_P − c²/(4μ_P²))/γ_P.
pub fn relation3_p(c: f64, h: f64, p: &ModelParams) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("host mass must be positive, got {h}")));
    }
    let excess = p.r_p() - p.n() as f64 * p.mu_p() * p.alpha_p() - c * c / (4.0 * p.mu_p2());
    let pm = h * excess / p.gamma_p();
    if !(pm > 0.0) {
        return Err(Error::Infeasible(format!("relation gives nonpositive P = {pm} at c = {c}")));
    }
    Ok(pm)
}

/// Host pulse at ρ_max = 0: standing Gaussian with variance μ_H/β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnperturbedHost {
    pub c0: f64,
    pub phi0: GaussianProfile,
    pub h0: f64,
}

pub fn unperturbed_host(p: &ModelParams) -> Result<UnperturbedHost> {
    let n = p.n() as f64;
    if !(p.beta() > 0.0) || !(p.r_h() > n * p.mu_h() * p.beta()) {
        return Err(Error::Infeasible(format!(
            "need beta > 0 and R_H > n mu_H beta, got beta = {} and {} vs {}",
            p.beta(),
            p.r_h(),
            n * p.mu_h() * p.beta()
        )));
    }
    Ok(UnperturbedHost {
        c0: 0.0,
        phi0: GaussianProfile { center: vec![0.0; p.n()], variance: p.mu_h() / p.beta(), mass: 1.0 },
        h0: (p.r_h() - n * p.mu_h() * p.beta()) / p.gamma_h(),
    })
}

/// A pursuit pulse (c, τ, H, P, φ, ψ), with φ in the host Hermite basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitPulse {
    pub c: f64,
    pub tau: f64,
    pub h_mass: f64,
    pub p_mass: f64,
    pub phi: CoefficientMap,
    pub psi: PursuitPsi,
}

impl PursuitPulse {
    /// Assembles a pulse from (c, H, φ), with P from the mass relation.
    pub fn new(p: &ModelParams, c: f64, h: f64, phi: CoefficientMap) -> Result<Self> {
        let p_mass = relation3_p(c, h, p)?;
        let psi = pursuit_psi(c, p)?;
        Ok(PursuitPulse { c, tau: psi.tau, h_mass: h, p_mass, phi, psi })
    }

    /// First-order prediction at ε = ρ_max of `p`, linearized around the
    /// ρ_max = 0 pulse with the series truncated at σ(k) ≤ `k_max`.
    pub fn first_order(p: &ModelParams, k_max: usize) -> Result<(Self, FirstOrderResponse)> {
        let base = p.with_rho_max(0.0)?;
        let host = unperturbed_host(&base)?;
        let resp = first_order_response(&base, k_max)?;
        let eps = p.rho_max();
        let lin = super::linearized::Linearized::new(&base)?;
        let mut phi = CoefficientMap::truncated();
        for (k, v) in resp.dphi_deps.iter() {
            phi.insert(k.clone(), eps * v)?;
        }
        let zero = MultiIndex::zeros(p.n());
        phi.insert(zero.clone(), phi.get(&zero) + lin.phi0_coefficient())?;
        let pulse = Self::new(p, eps * resp.dc_deps, host.h0 + eps * resp.deta_deps, phi)?;
        Ok((pulse, resp))
    }

    /// φ(z) in the frame where the pursuit direction is e₁.
    pub fn phi_at(&self, z: &[f64], p: &ModelParams) -> Result<f64> {
        Ok(self.phi.evaluate(z, &HermiteContext::from_params(p)?))
    }

    /// R_P − γ_P P/H − c²/(4μ_P²) − nμ_Pα_P, zero by construction.
    pub fn relation_residual(&self, p: &ModelParams) -> f64 {
        p.r_p() - p.gamma_p() * self.p_mass / self.h_mass - self.c * self.c / (4.0 * p.mu_p2())
            - p.n() as f64 * p.mu_p() * p.alpha_p()
    }

    pub fn export(&self, p: &ModelParams) -> PursuitExport {
        PursuitExport {
            c: self.c,
            tau: self.tau,
            h_mass: self.h_mass,
            p_mass: self.p_mass,
            psi_k_norm: self.psi.k_norm,
            psi: self.psi.profile(),
            relation_residual: self.relation_residual(p),
            phi: self.phi.clone(),
        }
    }
}

/// Closed-form parameters and plug-back diagnostics of a pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitExport {
    pub c: f64,
    pub tau: f64,
    pub h_mass: f64,
    pub p_mass: f64,
    pub psi_k_norm: f64,
    pub psi: GaussianProfile,
    pub relation_residual: f64,
    pub phi: CoefficientMap,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::stationary::psi_stationary;
    use crate::quadrature::integrate_adaptive2;

    fn params() -> ModelParams {
        ModelParams::reference().with_beta(1.0).unwrap().with_ell(0.05).unwrap()
    }

    #[test]
    fn reduces_to_stationary_profile() {
        let p = ModelParams::reference().with_alpha_h(0.5).unwrap();
        let psi = pursuit_psi(0.0, &p).unwrap();
        let st = psi_stationary(&p).unwrap();
        for z in [[0.0, 0.0], [0.3, -0.2], [1.0, 0.5]] {
            assert!((psi.density(&z) - st.density(&z)).abs() < 1e-14);
        }
    }

    #[test]
    fn literal_form_matches_gaussian() {
        let p = params();
        for c in [-0.7, 0.0, 0.3, 1.0] {
            let psi = pursuit_psi(c, &p).unwrap();
            let g = psi.profile();
            for z in [[0.0, 0.0], [-0.4, 0.1], [0.8, -0.6]] {
                let (a, b) = (psi.density(&z), g.density(&z));
                assert!((a - b).abs() < 1e-12 * b.max(1e-300), "c={c}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn unit_mass_by_quadrature() {
        let p = params();
        let psi = pursuit_psi(0.3, &p).unwrap();
        let m = integrate_adaptive2(|x, y| psi.density(&[x, y]), 1e-11).unwrap();
        assert!((m - 1.0).abs() < 1e-9, "{m}");
    }

    #[test]
    fn relation_arithmetic() {
        let p = ModelParams::reference();
        let pm = relation3_p(0.1, 3.0, &p).unwrap();
        let expect = 3.0 * (1.0 - 2.0 * 0.1f64.sqrt() - 0.01 / 0.4) / 0.01;
        assert!((pm - expect).abs() < 1e-10);
        assert!(matches!(relation3_p(5.0, 3.0, &p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn unperturbed_mass() {
        let h = unperturbed_host(&params()).unwrap();
        assert!((h.h0 - (4.0 - 2.0 * 0.1f64.sqrt())).abs() < 1e-12);
        assert!(unperturbed_host(&ModelParams::reference()).is_err());
    }

    #[test]
    fn first_order_pulse_is_consistent() {
        let p = ModelParams::reference()
            .with_beta(2.0)
            .unwrap()
            .with_ell(0.05)
            .unwrap()
            .with_rho_max(0.01)
            .unwrap();
        let (pulse, resp) = PursuitPulse::first_order(&p, 40).unwrap();
        assert!(pulse.c > 0.0 && resp.dc_deps > 0.0);
        assert!(pulse.relation_residual(&p).abs() < 1e-12);
        assert!((pulse.tau - 1.0 / (2.0 * p.mu_p() * p.alpha_p())).abs() < 1e-12);
        let h0 = unperturbed_host(&p).unwrap().h0;
        assert!(pulse.h_mass < h0);
    }
}
