//! Property tests for the documented invariants.

use proptest::prelude::*;
use redqueen::analytic::linearized::{CoefficientMap, Linearized};
use redqueen::analytic::pursuit::pursuit_psi;
use redqueen::diagnostics::{classify, fit_delay, fit_linear_speed, ClassifyConfig, Window};
use redqueen::grid::{quadrature_mass, Field, Grid};
use redqueen::hermite::{hermite_function, MultiIndex};
use redqueen::model::{fitness_host, impact, integrate_ode, ode_equilibrium, ode_rhs, ModelParams, OdeState};
use redqueen::output::{fmt_num, parse_trajectory_csv, trajectory_csv};
use redqueen::series::{binom_inequality, gamma_jk, gamma_tilde, SeriesParams};
use redqueen::solver::{rhs_full, Sample, SimState, Trajectory};

fn params() -> impl Strategy<Value = ModelParams> {
    (1.0..5.0f64, 0.5..2.0f64, 0.5..2.0f64, 0.01..1.0f64, 0.01..0.5f64).prop_map(|(rh, rp, gh, gp, rho)| {
        ModelParams::reference()
            .with_r_h(rh)
            .and_then(|p| p.with_r_p(rp))
            .and_then(|p| p.with_gamma_h(gh))
            .and_then(|p| p.with_gamma_p(gp))
            .and_then(|p| p.with_rho_max(rho))
            .unwrap()
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 2)
}

fn line_trajectory(t0: f64, c: f64, dir: [f64; 2], lag: f64) -> Trajectory {
    let samples = (0..40)
        .map(|i| {
            let t = t0 + 0.25 * i as f64;
            let x = [c * t * dir[0], c * t * dir[1]];
            Sample {
                t,
                h_mass: 1.0,
                p_mass: 1.0,
                xbar: x.to_vec(),
                ybar: vec![x[0] - lag * c * dir[0], x[1] - lag * c * dir[1]],
            }
        })
        .collect();
    Trajectory::from_samples(2, samples).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn direction_is_normalized(ux in -5.0..5.0f64, uy in -5.0..5.0f64) {
        prop_assume!(ux.hypot(uy) > 1e-6);
        let p = ModelParams::reference().with_u(&[ux, uy]).unwrap();
        let norm = p.u().iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_constants_rejected(v in -10.0..-1e-9f64) {
        let p = ModelParams::reference();
        prop_assert!(p.with_gamma_h(v).is_err());
        prop_assert!(p.with_beta(v).is_err());
        prop_assert!(p.with_ell(v).is_err());
        prop_assert!(p.with_mu_h2(0.0).is_err());
    }

    #[test]
    fn impact_positive_and_bounded(p in params(), x in point(), y in point()) {
        let v = impact(&x, &y, &p);
        prop_assert!(v > 0.0 && v <= p.rho_max());
    }

    #[test]
    fn host_fitness_is_isotropic(x in point(), xb in point(), a in 0.0..std::f64::consts::TAU) {
        let p = ModelParams::reference().with_alpha_h(0.5).unwrap().with_beta(0.7).unwrap();
        let rot = |v: &[f64]| vec![a.cos() * v[0] - a.sin() * v[1], a.sin() * v[0] + a.cos() * v[1]];
        let d = fitness_host(&x, &xb, &p) - fitness_host(&rot(&x), &rot(&xb), &p);
        prop_assert!(d.abs() < 1e-12);
    }

    #[test]
    fn equilibrium_zeroes_the_ode(p in params()) {
        let eq = ode_equilibrium(&p);
        let (dh, dp) = ode_rhs(eq, &p).unwrap();
        prop_assert!(dh.abs() < 1e-12 && dp.abs() < 1e-12, "{dh} {dp}");
    }

    #[test]
    fn ode_stays_positive_and_converges(p in params(), h0 in 0.05..20.0f64, p0 in 0.05..20.0f64) {
        let t_end = 10.0 * (1.0 / p.r_h()).max(1.0 / p.r_p()) * 20.0;
        let mut s = OdeState { h: h0, p: p0 };
        for _ in 0..20 {
            s = integrate_ode(s, t_end / 20.0, 0.01, &p).unwrap();
            prop_assert!(s.h > 0.0 && s.p > 0.0);
        }
        let eq = ode_equilibrium(&p);
        prop_assert!(((s.h - eq.h) / eq.h).abs() < 1e-6 && ((s.p - eq.p) / eq.p).abs() < 1e-6);
    }

    #[test]
    fn grid_spacing_exact(lo in -5.0..0.0f64, w in 0.5..10.0f64, m in 16usize..300) {
        let g = Grid::new(&[lo], &[lo + w], &[m]).unwrap();
        prop_assert_eq!(g.dx()[0], ((lo + w) - lo) / (m - 1) as f64);
        prop_assert!(Grid::new(&[lo], &[lo + w], &[15]).is_err());
    }

    #[test]
    fn constant_mass_exact(c in 0.1..10.0f64, hw in 0.5..5.0f64, m in 16usize..80) {
        let g = Grid::cube(2, hw, m).unwrap();
        let f = Field::from_fn(g, |_| c);
        let exact = c * (2.0 * hw) * (2.0 * hw);
        prop_assert!((quadrature_mass(&f) / exact - 1.0).abs() < 1e-13);
    }

    #[test]
    fn state_moments_match_quadrature(cx in -1.0..1.0f64, cy in -1.0..1.0f64, s in 0.3..0.8f64) {
        let g = Grid::cube(2, 5.0, 64).unwrap();
        let h = Field::gaussian(g.clone(), 3.0, &[cx, cy], s);
        let p = Field::gaussian(g, 2.0, &[cy, cx], s);
        let st = SimState::new(0.0, h.clone(), p.clone()).unwrap();
        prop_assert_eq!(st.h_mass(), quadrature_mass(&h));
        prop_assert_eq!(st.p_mass(), quadrature_mass(&p));
        let xw = Field::from_fn(h.grid().clone(), |x| x[0]);
        let mx: Vec<f64> = h.values().iter().zip(xw.values()).map(|(a, b)| a * b).collect();
        let m1 = quadrature_mass(&Field::new(h.grid().clone(), mx).unwrap()) / st.h_mass();
        prop_assert!((st.xbar()[0] - m1).abs() < 1e-12);
    }

    #[test]
    fn rhs_is_pure(cx in -1.0..1.0f64, s in 0.3..0.8f64) {
        let g = Grid::cube(2, 4.0, 32).unwrap();
        let st = SimState::new(0.0, Field::gaussian(g.clone(), 5.0, &[cx, 0.0], s), Field::gaussian(g, 3.0, &[0.0, cx], s)).unwrap();
        let p = ModelParams::reference();
        let (a1, b1) = rhs_full(&st, &p).unwrap();
        let (a2, b2) = rhs_full(&st, &p).unwrap();
        prop_assert!(a1.values().iter().zip(a2.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert!(b1.values().iter().zip(b2.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn cramer_bound(k in 0usize..=200, x in -40.0..40.0f64) {
        prop_assert!(hermite_function(k, x).abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn linearized_round_trip(
        coeffs in prop::collection::vec((0usize..6, 0usize..6, -1.0..1.0f64), 1..12),
        c in -1.0..1.0f64,
        eta in -1.0..1.0f64,
    ) {
        let p = ModelParams::reference().with_beta(1.0).unwrap().with_ell(0.05).unwrap();
        let lin = Linearized::new(&p).unwrap();
        let mut phi = CoefficientMap::new();
        for (a, b, v) in coeffs {
            phi.insert(MultiIndex::new(&[a, b]), v).unwrap();
        }
        let (f, h, r) = lin.forward(c, &phi, eta).unwrap();
        let sol = lin.inverse(&f, h, r).unwrap();
        prop_assert!((sol.c - c).abs() < 1e-8 && (sol.eta - eta).abs() < 1e-8);
        prop_assert!(sol.phi.max_abs_diff(&phi) < 1e-8);
    }

    #[test]
    fn pathogen_profile_mean_is_offset(c in -1.0..1.0f64) {
        let p = ModelParams::reference().with_beta(1.0).unwrap().with_ell(0.3).unwrap();
        let psi = pursuit_psi(c, &p).unwrap();
        let g = Grid::cube(2, 6.0, 161).unwrap();
        let f = Field::from_fn(g.clone(), |w| psi.density(w));
        let xw = Field::from_fn(g, |w| w[0]);
        let m: Vec<f64> = f.values().iter().zip(xw.values()).map(|(a, b)| a * b).collect();
        let mean = quadrature_mass(&Field::new(f.grid().clone(), m).unwrap()) / quadrature_mass(&f);
        prop_assert!((mean + 0.3).abs() < 1e-8, "mean {mean}");
    }

    #[test]
    fn speed_fit_invariant_under_translation_and_rotation(
        c in 0.05..2.0f64, shift in -50.0..50.0f64, a in 0.0..std::f64::consts::TAU,
    ) {
        let base = line_trajectory(0.0, c, [1.0, 0.0], 1.0);
        let moved = line_trajectory(shift, c, [a.cos(), a.sin()], 1.0);
        let f0 = fit_linear_speed(&base, Window::new(0.0, 10.0)).unwrap();
        let f1 = fit_linear_speed(&moved, Window::new(shift, shift + 10.0)).unwrap();
        prop_assert!((f0.c - f1.c).abs() < 1e-12 * (1.0 + shift.abs()));
        prop_assert!((f1.direction[0] - a.cos()).abs() < 1e-9 && (f1.direction[1] - a.sin()).abs() < 1e-9);
    }

    #[test]
    fn delay_fit_inverts_synthetic_lag(tau in 0.1..5.0f64, c in 0.05..2.0f64) {
        let traj = line_trajectory(0.0, c, [0.6, 0.8], tau);
        let d = fit_delay(&traj, c, &[0.6, 0.8], &[0.0, 0.0], Window::new(0.0, 10.0)).unwrap();
        prop_assert!((d - tau).abs() < 1e-12 * tau.max(1.0) / c.min(1.0));
    }

    #[test]
    fn classify_is_deterministic(c in 0.05..2.0f64, tau in 0.1..3.0f64) {
        let traj = line_trajectory(0.0, c, [1.0, 0.0], tau);
        let cfg = ClassifyConfig::default();
        let a = classify(&traj, &[0.0, 0.0], &cfg).unwrap();
        let b = classify(&traj, &[0.0, 0.0], &cfg).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn number_format_round_trips(x in prop::num::f64::ANY) {
        prop_assume!(x.is_finite());
        let back: f64 = fmt_num(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn trajectory_csv_round_trips(xs in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 2..20)) {
        let samples: Vec<Sample> = xs
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| Sample { t: i as f64 * 0.1, h_mass: a.abs() + 1.0, p_mass: b.abs(), xbar: vec![a, b], ybar: vec![b, a] })
            .collect();
        let traj = Trajectory::from_samples(2, samples.clone()).unwrap();
        let back = parse_trajectory_csv(&trajectory_csv(&traj), 2, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back, samples);
    }

    #[test]
    fn trajectory_times_strictly_increase(t in 0.0..10.0f64) {
        let s = |t: f64| Sample { t, h_mass: 1.0, p_mass: 1.0, xbar: vec![0.0], ybar: vec![0.0] };
        prop_assert!(Trajectory::from_samples(1, vec![s(t), s(t)]).is_err());
        prop_assert!(Trajectory::from_samples(1, vec![s(t), s(t + 1.0)]).is_ok());
    }

    #[test]
    fn binomial_inequality_exact(j in 0usize..=60, k in 0usize..=60, l in 0usize..=60) {
        prop_assert!(binom_inequality(j, k, l % (j.min(k) + 1)).unwrap());
    }

    #[test]
    fn gamma_below_gamma_tilde(j in 0usize..=200, k in 0usize..=200) {
        let sp = SeriesParams::new(0.1, 5.0, 1).unwrap();
        prop_assert!(gamma_jk(j, k, &sp) <= gamma_tilde(j, k, &sp));
    }
}
