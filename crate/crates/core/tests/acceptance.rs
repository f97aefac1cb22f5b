//! Acceptance run: one line per criterion, tolerances as documented in the
//! README. Every simulation below fails loudly if a density dips below
//! −1e-8·max at an accepted step, so completing a run also checks that.
//!
//! The process exits 0 even when a criterion is red; set
//! `ACCEPTANCE_STRICT=1` to turn red criteria into a failing exit code.
//! Artifacts of the first pass go to `$CARGO_TARGET_TMPDIR/acceptance`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use redqueen::analytic::linearized::first_order_response;
use redqueen::analytic::pursuit::unperturbed_host;
use redqueen::analytic::stationary::{default_grid, solve_stationary_on, stationary_residual};
use redqueen::analytic::GaussianProfile;
use redqueen::config::SimulationConfig;
use redqueen::diagnostics::{classify, ring_score, PulseReport, Regime};
use redqueen::grid::{l1_norm, Field};
use redqueen::model::{integrate_ode, ode_equilibrium, ModelParams, OdeState};
use redqueen::output::{fmt_num, trajectory_csv};
use redqueen::solver::{simulate, simulate_from, SimState, Trajectory};
use redqueen::verify::{run_suite, Suite, SuiteReport, VerifyOptions};

#[derive(Clone, Copy, PartialEq)]
enum Mark {
    Pass,
    Fail,
    Info,
}

struct Line {
    id: &'static str,
    mark: Mark,
    text: String,
}

#[derive(Default)]
struct Outcome {
    lines: Vec<Line>,
    artifacts: Vec<(String, String)>,
}

impl Outcome {
    fn check(&mut self, id: &'static str, ok: bool, text: String) {
        self.lines.push(Line { id, mark: if ok { Mark::Pass } else { Mark::Fail }, text });
    }
    fn info(&mut self, id: &'static str, text: String) {
        self.lines.push(Line { id, mark: Mark::Info, text });
    }
    fn artifact(&mut self, name: &str, text: String) {
        self.artifacts.push((name.to_string(), text));
    }
    fn runtime(&mut self, id: &'static str, t: Duration, limit_s: f64) {
        let s = t.as_secs_f64();
        self.check(id, s < limit_s, format!("runtime {s:.1} s < {limit_s} s"));
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> SimulationConfig {
    SimulationConfig::load(&configs().join(name)).expect("shipped config loads")
}

fn offset(p: &ModelParams) -> Vec<f64> {
    p.u().iter().map(|u| p.ell() * u).collect()
}

fn report(traj: &Trajectory, cfg: &SimulationConfig) -> PulseReport {
    classify(traj, &offset(&cfg.params), &cfg.diagnostics).expect("classification")
}

fn rel_l1(a: &Field, b: &Field) -> f64 {
    let d: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    l1_norm(&Field::new(a.grid().clone(), d).expect("same grid")) / l1_norm(b)
}

fn suite_lines(o: &mut Outcome, id: &'static str, rep: &SuiteReport) {
    let count = |f: &dyn Fn(&str) -> bool| rep.checks.iter().filter(|c| f(&c.status.to_string())).count();
    let fails: Vec<&str> = rep.failures().iter().map(|c| c.name.as_str()).collect();
    o.check(
        id,
        rep.passed(),
        format!(
            "{} pass, {} fail, {} skip, {} evidence rows{}",
            count(&|s| s == "PASS"),
            fails.len(),
            count(&|s| s == "SKIP"),
            count(&|s| s == "INFO"),
            if fails.is_empty() { String::new() } else { format!(" (failed: {})", fails.join(", ")) }
        ),
    );
    o.artifact(&format!("{id}_checks.csv"), rep.to_csv());
    for (name, text) in &rep.artifacts {
        o.artifact(&format!("{id}_{name}"), text.clone());
    }
}

fn ode_equilibrium_check() -> Outcome {
    let mut o = Outcome::default();
    let t0 = Instant::now();
    let p = ModelParams::reference();
    let end = integrate_ode(OdeState { h: 1.0, p: 1.0 }, 500.0, 0.01, &p).expect("ode");
    let (h_inf, p_inf) = (0.04 / 0.11, 4.0 / 0.11);
    let eq = ode_equilibrium(&p);
    let eh = (end.h - h_inf).abs() / h_inf;
    let ep = (end.p - p_inf).abs() / p_inf;
    o.check("1", eh < 1e-6 && ep < 1e-6, format!("(H, P)(500) = ({}, {}), rel err {eh:.1e}, {ep:.1e} < 1e-6", end.h, end.p));
    o.check(
        "1",
        (eq.h - h_inf).abs() / h_inf < 1e-14 && (eq.p - p_inf).abs() / p_inf < 1e-14,
        format!("closed-form equilibrium ({}, {}) equals (0.04/0.11, 4/0.11)", eq.h, eq.p),
    );
    o.artifact("1_ode.txt", format!("{} {}\n", fmt_num(end.h), fmt_num(end.p)));
    o.runtime("1", t0.elapsed(), 1.0);
    o
}

fn hermite_check() -> Outcome {
    let mut o = Outcome::default();
    let t0 = Instant::now();
    let rep = run_suite(Suite::Hermite, &VerifyOptions::default());
    suite_lines(&mut o, "2", &rep);
    o.runtime("2", t0.elapsed(), 60.0);
    o
}

fn stationary_check() -> Outcome {
    let mut o = Outcome::default();
    let t0 = Instant::now();
    let mut cfg = SimulationConfig::reference();
    cfg.params = cfg.params.with_alpha_h(0.5).expect("alpha_h");
    let p = cfg.params.clone();

    let mut res = vec![];
    let mut fine = None;
    for m in [64, 128, 256] {
        let st = solve_stationary_on(&p, default_grid(&p, m).expect("grid")).expect("stationary");
        res.push((m as f64, stationary_residual(&st, &p)));
        fine = Some(st);
    }
    let st = fine.expect("m = 256 solved");
    let r256 = res[2].1;
    o.check("3a", r256.relation.abs() < 1e-10, format!("|R_P - g_P P/H - n mu_P a_P| = {:.1e} < 1e-10", r256.relation.abs()));
    // Least-squares slope of log residual against log m.
    let xs: Vec<f64> = res.iter().map(|(m, _)| m.ln()).collect();
    let ys: Vec<f64> = res.iter().map(|(_, r)| r.host.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let order = -xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    o.check("3b", r256.host < 1e-4, format!("host residual sup-norm at m=256 = {:.2e} < 1e-4", r256.host));
    o.check(
        "3b",
        order >= 1.8,
        format!(
            "residual order {order:.2} >= 1.8 (m=64,128,256: {:.2e}, {:.2e}, {:.2e})",
            res[0].1.host, res[1].1.host, r256.host
        ),
    );

    // Perturbed start on the solver grid: host mass +20% and shifted by 0.2,
    // pathogen mass -20%.
    let g = st.phi.grid().clone();
    let h_ref = st.phi.scaled(st.h_mass);
    let p_ref = Field::from_fn(g.clone(), |x| st.p_mass * st.psi.density(x));
    let h0 = Field::from_fn(g.clone(), |x| {
        let mut y = x.to_vec();
        y[0] -= 0.2;
        1.2 * st.h_mass * st.phi.interpolate(&y)
    });
    cfg.t_end = 50.0;
    cfg.snapshot_times = vec![50.0];
    let traj = simulate_from(SimState::new(0.0, h0, p_ref.scaled(0.8)).expect("state"), &cfg).expect("relaxation run");
    let end = traj.snapshots.last().expect("t = 50 snapshot");
    let (eh, ep) = (rel_l1(end.h(), &h_ref), rel_l1(end.p(), &p_ref));
    o.check("3c", eh < 1e-3 && ep < 1e-3, format!("relative L1 distance at t=50: host {eh:.2e}, pathogen {ep:.2e} < 1e-3"));
    o.artifact("3c_trajectory.csv", trajectory_csv(&traj));
    o.runtime("3", t0.elapsed(), 300.0);
    o
}

fn pursuit_check() -> Outcome {
    let mut o = Outcome::default();
    let t0 = Instant::now();
    let base = load("pursuit.toml");
    let p0 = base.params.with_rho_max(0.0).expect("rho");
    let host = unperturbed_host(&p0).expect("beta > 0");

    // (a) rho_max = 0: the run relaxes onto H0 phi0 around its own mean. A
    // finer grid than the pursuit runs keeps the O(dx^2) gap below 1e-3.
    let mut cfg = base.clone();
    cfg.params = p0;
    cfg.grid.m = 192;
    cfg.t_end = 20.0;
    cfg.snapshot_times = vec![20.0];
    let traj = simulate(&cfg).expect("rho = 0 run");
    let s = traj.snapshots.last().expect("snapshot");
    let prof = GaussianProfile { center: s.xbar().to_vec(), ..host.phi0.clone() };
    let reference = Field::from_fn(s.grid().clone(), |x| host.h0 * prof.density(x));
    let e = rel_l1(s.h(), &reference);
    let dh = (s.h_mass() - host.h0).abs() / host.h0;
    o.check("4a", e < 1e-3 && dh < 1e-3, format!("rho=0: L1 to H0 phi0 = {e:.2e}, |H-H0|/H0 = {dh:.2e} < 1e-3"));
    o.artifact("4a_trajectory.csv", trajectory_csv(&traj));

    // (b) pulses at the configured rho values.
    let tau = 1.0 / (2.0 * base.params.mu_p() * base.params.alpha_p());
    let run = |rho: f64| {
        let mut cfg = base.clone();
        cfg.params = cfg.params.with_rho_max(rho).expect("rho");
        let traj = simulate(&cfg).expect("pursuit run");
        let rep = report(&traj, &cfg);
        let h = traj.final_sample().expect("samples").h_mass;
        (traj, rep, h)
    };
    let mut pts = vec![];
    for rho in [0.02, 0.05] {
        let (traj, rep, h) = run(rho);
        let delay = rep.delay_fit.unwrap_or(f64::NAN);
        let ok = rep.regime == Regime::LinearPulse && rep.c_fit > 0.0 && ((delay - tau) / tau).abs() < 0.05 && h < host.h0;
        o.check(
            "4b",
            ok,
            format!(
                "rho={rho}: {} c={:.4} delay={delay:.4} (tau={tau:.5}, within 5%) H={h:.4} < H0={:.4}",
                rep.regime.label(),
                rep.c_fit,
                host.h0
            ),
        );
        o.artifact(&format!("4b_rho{rho}_trajectory.csv"), trajectory_csv(&traj));
        o.artifact(&format!("4b_rho{rho}_report.json"), serde_json::to_string_pretty(&rep).expect("json"));
        pts.push((rho, rep.c_fit));
    }

    // (c) slope through the origin against the first-order response.
    let dc = first_order_response(&base.params, 120).expect("response").dc_deps;
    let slope = pts.iter().map(|(r, c)| r * c).sum::<f64>() / pts.iter().map(|(r, _)| r * r).sum::<f64>();
    let rel = (slope / dc - 1.0).abs();
    o.check(
        "4c",
        rel < 0.15,
        format!("slope of c(rho) through origin on {{0.02, 0.05}} = {slope:.3} vs dc/deps = {dc:.4}: rel diff {rel:.2} < 0.15"),
    );
    let chords: Vec<String> = pts.iter().map(|(r, c)| format!("c/rho({r}) = {:.3}", c / r)).collect();
    o.info("4c", format!("chord slopes {}; linear through the origin would make these equal", chords.join(", ")));
    // Chords at small rho approach the derivative; a linear extrapolation of
    // the chord to rho = 0 removes the leading curvature.
    let small: Vec<(f64, f64)> = [0.001, 0.002].iter().map(|&r| (r, run(r).1.c_fit / r)).collect();
    let extrap = 2.0 * small[0].1 - small[1].1;
    o.info(
        "4c",
        format!(
            "small-rho chords c/rho(0.001) = {:.3}, c/rho(0.002) = {:.3}, extrapolated to 0: {extrap:.3} ({:+.1}% from dc/deps)",
            small[0].1,
            small[1].1,
            100.0 * (extrap / dc - 1.0)
        ),
    );
    o.artifact("4c_slopes.txt", format!("{} {} {} {}\n", fmt_num(dc), fmt_num(slope), fmt_num(small[0].1), fmt_num(small[1].1)));
    o.runtime("4", t0.elapsed(), 900.0);
    o
}

fn rotating_check() -> Outcome {
    let mut o = Outcome::default();
    let t0 = Instant::now();
    let cfg = load("rotating.toml");
    let traj = simulate(&cfg).expect("rotating run");
    let rep = report(&traj, &cfg);
    let (rd, wd) = (rep.radius_drift.unwrap_or(f64::NAN), rep.omega_drift.unwrap_or(f64::NAN));
    o.check(
        "5",
        rep.regime == Regime::RotatingPulse && rd < 0.02 && wd < 0.05,
        format!(
            "{} radius={:.4} omega={:.4}, radius drift {rd:.2e} < 0.02, omega drift {wd:.2e} < 0.05",
            rep.regime.label(),
            rep.radius_fit.unwrap_or(f64::NAN),
            rep.omega_fit.unwrap_or(f64::NAN)
        ),
    );
    o.artifact("5_trajectory.csv", trajectory_csv(&traj));
    o.artifact("5_report.json", serde_json::to_string_pretty(&rep).expect("json"));
    o.runtime("5", t0.elapsed(), 600.0);
    o
}

fn ring_check() -> Outcome {
    let mut o = Outcome::default();
    let t0 = Instant::now();
    let cfg = load("ring.toml");
    let traj = simulate(&cfg).expect("ring run");
    let snap10 = traj.snapshots.iter().find(|s| (s.t() - 10.0).abs() < 1e-9).expect("t = 10 snapshot");
    let score = ring_score(snap10.h()).expect("ring score");
    let x1 = &traj.sample_at(1.0).expect("t = 1").xbar;
    let x20 = &traj.sample_at(20.0).expect("t = 20").xbar;
    let disp = x1.iter().zip(x20).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    o.check("6", score > 0.5, format!("beta=0, alpha_H=0: ring score at t=10 = {score:.3} > 0.5"));
    o.check("6", disp < 0.3, format!("beta=0, alpha_H=0: |xbar(20) - xbar(1)| = {disp:.3} < 0.3"));
    let rep = report(&traj, &cfg);
    o.check(
        "6",
        rep.regime == Regime::RingDiffusing,
        format!("beta=0, alpha_H=0: verdict {} (ring growth {:?})", rep.regime.label(), rep.ring_growth),
    );
    o.artifact("6_ring_trajectory.csv", trajectory_csv(&traj));

    let cfg = load("ring_selection.toml");
    let traj = simulate(&cfg).expect("selection run");
    let x = &traj.sample_at(20.0).expect("t = 20").xbar;
    let r = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    o.check("6", r < 0.1, format!("beta=0, alpha_H=0.5: |xbar(20)| = {r:.2e} < 0.1"));
    o.artifact("6_selection_trajectory.csv", trajectory_csv(&traj));
    o.runtime("6", t0.elapsed(), 600.0);
    o
}

fn series_check() -> Outcome {
    let mut o = Outcome::default();
    let t0 = Instant::now();
    let rep = run_suite(Suite::Series, &VerifyOptions::default());
    suite_lines(&mut o, "7", &rep);
    let conj = rep.artifacts.iter().any(|(n, t)| n.contains("conjecture") && t.lines().count() > 1);
    o.check("7", conj, "conjecture report for n=3 generated".into());
    o.runtime("7", t0.elapsed(), 300.0);
    o
}

fn linear_algebra_check() -> Outcome {
    let mut o = Outcome::default();
    let t0 = Instant::now();
    let rep = run_suite(Suite::Pursuit, &VerifyOptions::default());
    suite_lines(&mut o, "8", &rep);
    o.runtime("8", t0.elapsed(), 120.0);
    o
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 8] = [
    ("1 ODE equilibrium", ode_equilibrium_check),
    ("2 Hermite suite", hermite_check),
    ("3 stationary state", stationary_check),
    ("4 pursuit pulse", pursuit_check),
    ("5 rotating regime", rotating_check),
    ("6 ring regime", ring_check),
    ("7 series suite", series_check),
    ("8 linear algebra suite", linear_algebra_check),
];

fn print_line(l: &Line) {
    let tag = match l.mark {
        Mark::Pass => "PASS",
        Mark::Fail => "FAIL",
        Mark::Info => "INFO",
    };
    println!("{tag}  [{}] {}", l.id, l.text);
}

fn main() {
    let out = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&out).expect("artifact dir");
    let mut fails = 0;
    let mut first: Vec<Vec<(String, String)>> = vec![];
    for (name, f) in CRITERIA {
        println!("== {name}");
        let o = f();
        for l in &o.lines {
            print_line(l);
            fails += usize::from(l.mark == Mark::Fail);
        }
        for (n, t) in &o.artifacts {
            std::fs::write(out.join(n), t).expect("write artifact");
        }
        first.push(o.artifacts);
    }

    println!("== 9 determinism (repeating criteria 1-8)");
    let t0 = Instant::now();
    let mut differing = vec![];
    let mut compared = 0;
    for ((_, f), a) in CRITERIA.iter().zip(&first) {
        let b = f().artifacts;
        if b.len() != a.len() {
            differing.push(format!("artifact count {} vs {}", a.len(), b.len()));
        }
        for ((na, ta), (nb, tb)) in a.iter().zip(&b) {
            compared += 1;
            if na != nb || ta.as_bytes() != tb.as_bytes() {
                differing.push(na.clone());
            }
        }
    }
    let ok = differing.is_empty();
    fails += usize::from(!ok);
    print_line(&Line {
        id: "9",
        mark: if ok { Mark::Pass } else { Mark::Fail },
        text: format!(
            "{compared} artifacts byte-identical on repeat{} ({:.0} s)",
            if ok { String::new() } else { format!("; differing: {}", differing.join(", ")) },
            t0.elapsed().as_secs_f64()
        ),
    });

    println!("== summary: {fails} red line(s); artifacts in {}", out.display());
    if fails > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
