//! Method-of-lines integration of the nonlocal host-pathogen system.
//!
//! Space is discretized with second-order central differences and zero
//! ghost nodes; time with classical RK4. The masses H, P and mean phenotypes
//! x̄, ȳ are recomputed from the stage fields at every RK stage.

use serde::{Deserialize, Serialize};

use crate::config::{FrameMode, SimulationConfig};
use crate::error::{Error, Result};
use crate::grid::{moments_of, Field, Grid};
use crate::model::ModelParams;
use crate::par;
use crate::rk4::Rk4;
use crate::tolerances::NEGATIVITY_REL_TOL;

/// Nonlocal quantities of a (h, p) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nonlocal {
    pub h_mass: f64,
    pub p_mass: f64,
    pub xbar: Vec<f64>,
    pub ybar: Vec<f64>,
}

fn nonlocal_of(grid: &Grid, h: &[f64], p: &[f64]) -> Nonlocal {
    let mh = moments_of(grid, h);
    let mp = moments_of(grid, p);
    let mean = |m: &crate::grid::Moments| -> Vec<f64> {
        if m.mass > 0.0 {
            m.first.iter().map(|x| x / m.mass).collect()
        } else {
            vec![0.0; grid.n()]
        }
    };
    Nonlocal { xbar: mean(&mh), ybar: mean(&mp), h_mass: mh.mass, p_mass: mp.mass }
}

/// Host and pathogen densities at one time with their derived quantities.
///
/// The derived values are computed at construction and cannot go stale.
/// For a zero density the corresponding mean is reported as the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    t: f64,
    h: Field,
    p: Field,
    nl: Nonlocal,
}

impl SimState {
    pub fn new(t: f64, h: Field, p: Field) -> Result<Self> {
        if h.grid() != p.grid() {
            return Err(Error::Domain("host and pathogen fields must share a grid".into()));
        }
        let nl = nonlocal_of(h.grid(), h.values(), p.values());
        Ok(SimState { t, h, p, nl })
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn h(&self) -> &Field {
        &self.h
    }
    pub fn p(&self) -> &Field {
        &self.p
    }
    pub fn grid(&self) -> &Grid {
        self.h.grid()
    }
    pub fn h_mass(&self) -> f64 {
        self.nl.h_mass
    }
    pub fn p_mass(&self) -> f64 {
        self.nl.p_mass
    }
    pub fn xbar(&self) -> &[f64] {
        &self.nl.xbar
    }
    pub fn ybar(&self) -> &[f64] {
        &self.nl.ybar
    }
    pub fn nonlocal(&self) -> &Nonlocal {
        &self.nl
    }
}

/// Stable step for explicit RK4: the diffusion limit, the reaction time
/// scale, and a cap keeping the stiffest linear rate (discrete Laplacian plus
/// the quadratic selection potentials) inside the real stability interval.
/// Trait means lie in the box, so the box diameter bounds every distance to
/// them; the host's own selection term uses the initial box corners.
pub fn cfl_limit(grid: &Grid, p: &ModelParams) -> f64 {
    let dx2 = grid.dx().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
    let mu2 = p.mu_h2().max(p.mu_p2());
    let n = grid.n() as f64;
    let diff = crate::tolerances::CFL_SAFETY * dx2 / (2.0 * n * mu2);
    let diam2: f64 = grid.lo().iter().zip(grid.hi()).map(|(a, b)| (b - a) * (b - a)).sum();
    let corner2: f64 = grid.lo().iter().zip(grid.hi()).map(|(a, b)| (a * a).max(b * b)).sum();
    let reach = diam2.sqrt() + p.ell();
    let potential = (p.alpha_h().powi(2) * corner2 + p.beta().powi(2) * diam2).max(p.alpha_p().powi(2) * reach * reach);
    let stiff = crate::tolerances::RK4_REAL_STABILITY / (4.0 * n * mu2 / dx2 + potential);
    diff.min(stiff).min(0.1 / p.r_h().max(p.r_p()).max(f64::MIN_POSITIVE))
}

/// Per-axis factors of the separable rate functions.
struct AxisTerms {
    host: Vec<Vec<f64>>,
    kernel: Vec<Vec<f64>>,
    path: Vec<Vec<f64>>,
}

fn axis_terms(grid: &Grid, prm: &ModelParams, nl: &Nonlocal) -> AxisTerms {
    let (ah2, b2, ap2) = (prm.alpha_h().powi(2), prm.beta().powi(2), prm.alpha_p().powi(2));
    let mut t = AxisTerms { host: vec![], kernel: vec![], path: vec![] };
    for a in 0..grid.n() {
        let xs = grid.coords(a);
        let (xb, yb, lu) = (nl.xbar[a], nl.ybar[a], prm.ell() * prm.u()[a]);
        t.host.push(xs.iter().map(|x| -ah2 * x * x - b2 * (x - xb) * (x - xb)).collect());
        t.kernel.push(xs.iter().map(|x| (-prm.theta() * (x - yb) * (x - yb)).exp()).collect());
        t.path.push(xs.iter().map(|y| -ap2 * (y + lu - xb) * (y + lu - xb)).collect());
    }
    t
}

fn row_of(v: &[f64], r: usize, m1: usize) -> &[f64] {
    &v[r * m1..(r + 1) * m1]
}

/// Writes dh/dt and dp/dt for raw nodal values and returns the nonlocal
/// quantities at which they were evaluated.
pub fn rhs_into(
    grid: &Grid,
    prm: &ModelParams,
    h: &[f64],
    p: &[f64],
    dh: &mut [f64],
    dp: &mut [f64],
) -> Result<Nonlocal> {
    let nl = nonlocal_of(grid, h, p);
    if !(nl.h_mass > 0.0) {
        if h.iter().all(|&v| v == 0.0) && p.iter().all(|&v| v == 0.0) {
            dh.fill(0.0);
            dp.fill(0.0);
            return Ok(nl);
        }
        return Err(Error::DegenerateMass { field: "h", mass: nl.h_mass });
    }
    let ax = axis_terms(grid, prm, &nl);
    let ch = prm.r_h() - prm.gamma_h() * nl.h_mass;
    let cp = prm.r_p() - prm.gamma_p() * nl.p_mass / nl.h_mass;
    let pr = nl.p_mass * prm.rho_max();
    let (mh2, mp2) = (prm.mu_h2(), prm.mu_p2());

    if grid.n() == 1 {
        let m = grid.m()[0];
        let c = 1.0 / (grid.dx()[0] * grid.dx()[0]);
        let at = |v: &[f64], k: isize| if k < 0 || k >= m as isize { 0.0 } else { v[k as usize] };
        for k in 0..m {
            let ki = k as isize;
            let lh = c * (at(h, ki - 1) - 2.0 * h[k] + at(h, ki + 1));
            let lp = c * (at(p, ki - 1) - 2.0 * p[k] + at(p, ki + 1));
            let rate_h = ch + ax.host[0][k] - pr * ax.kernel[0][k];
            let rate_p = cp + ax.path[0][k];
            dh[k] = mh2 * lh + rate_h * h[k];
            dp[k] = mp2 * lp + rate_p * p[k];
        }
        return Ok(nl);
    }

    let (m0, m1) = (grid.m()[0], grid.m()[1]);
    let c0 = 1.0 / (grid.dx()[0] * grid.dx()[0]);
    let c1 = 1.0 / (grid.dx()[1] * grid.dx()[1]);
    let ax = &ax;
    par::for_each_row2(dh, dp, m1, |i, rh, rp| {
        let row = |v, r| row_of(v, r, m1);
        let (hc, pc) = (row(h, i), row(p, i));
        let (hu, pu) = if i > 0 { (Some(row(h, i - 1)), Some(row(p, i - 1))) } else { (None, None) };
        let (hd, pd) = if i + 1 < m0 { (Some(row(h, i + 1)), Some(row(p, i + 1))) } else { (None, None) };
        let (ah0, ak0, ap0) = (ax.host[0][i], ax.kernel[0][i], ax.path[0][i]);
        let (ah1, ak1, ap1) = (&ax.host[1], &ax.kernel[1], &ax.path[1]);
        for j in 0..m1 {
            let lap = |c: &[f64], u: Option<&[f64]>, d: Option<&[f64]>| {
                let up = u.map_or(0.0, |r| r[j]);
                let dn = d.map_or(0.0, |r| r[j]);
                let l = if j > 0 { c[j - 1] } else { 0.0 };
                let r = if j + 1 < m1 { c[j + 1] } else { 0.0 };
                c0 * (up - 2.0 * c[j] + dn) + c1 * (l - 2.0 * c[j] + r)
            };
            let rate_h = ch + ah0 + ah1[j] - pr * ak0 * ak1[j];
            let rate_p = cp + ap0 + ap1[j];
            rh[j] = mh2 * lap(hc, hu, hd) + rate_h * hc[j];
            rp[j] = mp2 * lap(pc, pu, pd) + rate_p * pc[j];
        }
    });
    Ok(nl)
}

/// Time derivatives of both densities at a state.
pub fn rhs_full(s: &SimState, prm: &ModelParams) -> Result<(Field, Field)> {
    let len = s.grid().len();
    let (mut dh, mut dp) = (vec![0.0; len], vec![0.0; len]);
    rhs_into(s.grid(), prm, s.h.values(), s.p.values(), &mut dh, &mut dp)?;
    Ok((
        Field::from_parts_unchecked(s.grid().clone(), dh),
        Field::from_parts_unchecked(s.grid().clone(), dp),
    ))
}

/// Reusable RK4 integrator over the concatenated state [h, p].
pub struct Integrator {
    grid: Grid,
    params: ModelParams,
    rk: Rk4,
    y: Vec<f64>,
}

impl Integrator {
    pub fn new(state: &SimState, params: &ModelParams) -> Self {
        let len = state.grid().len();
        let mut y = Vec::with_capacity(2 * len);
        y.extend_from_slice(state.h.values());
        y.extend_from_slice(state.p.values());
        Integrator { grid: state.grid().clone(), params: params.clone(), rk: Rk4::new(2 * len), y }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn split(&self) -> (&[f64], &[f64]) {
        self.y.split_at(self.grid.len())
    }

    /// One RK4 step followed by the negativity check.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let len = self.grid.len();
        let (grid, prm) = (&self.grid, &self.params);
        self.rk.step(&mut self.y, dt, |y, dy| {
            let (h, p) = y.split_at(len);
            let (dh, dp) = dy.split_at_mut(len);
            rhs_into(grid, prm, h, p, dh, dp).map(|_| ())
        })?;
        let (h, p) = self.split();
        check_negativity("h", h)?;
        check_negativity("p", p)?;
        Ok(())
    }

    pub fn nonlocal(&self) -> Nonlocal {
        let (h, p) = self.split();
        nonlocal_of(&self.grid, h, p)
    }

    pub fn state(&self, t: f64) -> SimState {
        let (h, p) = self.split();
        let h = Field::from_parts_unchecked(self.grid.clone(), h.to_vec());
        let p = Field::from_parts_unchecked(self.grid.clone(), p.to_vec());
        let nl = nonlocal_of(&self.grid, h.values(), p.values());
        SimState { t, h, p, nl }
    }

    /// Moves the window by whole cells; values leaving the box are dropped
    /// and entering nodes are zero.
    pub fn shift_window(&mut self, cells: &[i64]) {
        let len = self.grid.len();
        let g = self.grid.clone();
        let shift = |src: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; len];
            for (idx, o) in out.iter_mut().enumerate() {
                let k = g.unflatten(idx);
                let mut off = 0usize;
                let mut inside = true;
                for a in 0..g.n() {
                    let s = k[a] as i64 + cells[a];
                    if s < 0 || s >= g.m()[a] as i64 {
                        inside = false;
                        break;
                    }
                    off = if a == 0 { s as usize } else { off * g.m()[1] + s as usize };
                }
                if inside {
                    *o = src[off];
                }
            }
            out
        };
        let (h, p) = self.y.split_at(len);
        let (nh, np) = (shift(h), shift(p));
        self.y[..len].copy_from_slice(&nh);
        self.y[len..].copy_from_slice(&np);
        self.grid = self.grid.shifted(cells);
    }
}

fn check_negativity(field: &'static str, v: &[f64]) -> Result<()> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &x in v {
        if !x.is_finite() {
            return Err(Error::Numeric(format!("non-finite value in {field}")));
        }
        min = min.min(x);
        max = max.max(x);
    }
    let tol = NEGATIVITY_REL_TOL * max.max(0.0);
    if min < -tol {
        return Err(Error::Instability { field, min, tol });
    }
    Ok(())
}

/// One RK4 step from `s`.
pub fn step_rk4(s: &SimState, dt: f64, prm: &ModelParams) -> Result<SimState> {
    let mut it = Integrator::new(s, prm);
    it.step(dt).map_err(|e| e.at(s.t))?;
    Ok(it.state(s.t + dt))
}

/// Per-step summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub h_mass: f64,
    pub p_mass: f64,
    pub xbar: Vec<f64>,
    pub ybar: Vec<f64>,
}

impl Sample {
    fn from_nl(t: f64, nl: &Nonlocal) -> Self {
        Sample { t, h_mass: nl.h_mass, p_mass: nl.p_mass, xbar: nl.xbar.clone(), ybar: nl.ybar.clone() }
    }
}

/// Output of a run: per-step samples, scheduled snapshots, and the
/// cumulative comoving shift in cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<SimState>,
    pub frame_shift: Vec<i64>,
    pub dt: f64,
}

impl Trajectory {
    /// Builds a trajectory from samples alone (no snapshots); times must
    /// increase strictly.
    pub fn from_samples(n: usize, samples: Vec<Sample>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Domain("sample times must increase strictly".into()));
        }
        if samples.iter().any(|s| s.xbar.len() != n || s.ybar.len() != n) {
            return Err(Error::Domain("sample dimension mismatch".into()));
        }
        Ok(Trajectory { n, samples, snapshots: vec![], frame_shift: vec![0; n], dt: 0.0 })
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn final_sample(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Sample closest in time to `t`.
    pub fn sample_at(&self, t: f64) -> Option<&Sample> {
        self.samples.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }

    /// Samples with t in `[t0, t1]`.
    pub fn window(&self, t0: f64, t1: f64) -> Vec<&Sample> {
        self.samples.iter().filter(|s| s.t >= t0 && s.t <= t1).collect()
    }
}

/// Integrates a configured run to `t_end`.
pub fn simulate(cfg: &SimulationConfig) -> Result<Trajectory> {
    let init = cfg.initial_state()?;
    simulate_from(init, cfg)
}

/// Integrates from an explicit initial state with the run settings of `cfg`
/// (its initial blobs and grid are ignored).
pub fn simulate_from(init: SimState, cfg: &SimulationConfig) -> Result<Trajectory> {
    let prm = &cfg.params;
    let limit = cfl_limit(init.grid(), prm);
    let dt = match cfg.dt {
        Some(dt) if dt > limit * (1.0 + 1e-12) => {
            return Err(Error::Config(format!("dt = {dt} exceeds the stability limit {limit}")))
        }
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(Error::Config(format!("dt must be > 0, got {dt}"))),
        None => limit,
    };
    let n = init.grid().n();
    let t0 = init.t();
    let mut stops: Vec<f64> = cfg.snapshot_times.iter().copied().filter(|&s| s > t0 && s < cfg.t_end).collect();
    stops.push(cfg.t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut traj = Trajectory { n, samples: vec![], snapshots: vec![], frame_shift: vec![0; n], dt };
    traj.samples.push(Sample::from_nl(t0, init.nonlocal()));
    let wants = |t: f64| cfg.snapshot_times.iter().any(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()));
    if wants(t0) {
        traj.snapshots.push(init.clone());
    }
    let mut it = Integrator::new(&init, prm);
    let mut t_a = t0;
    for &t_b in stops.iter().filter(|&&s| s > t0) {
        let steps = ((t_b - t_a) / dt - 1e-9).ceil().max(1.0) as usize;
        let h = (t_b - t_a) / steps as f64;
        for s in 1..=steps {
            let t_prev = t_a + (s - 1) as f64 * h;
            it.step(h).map_err(|e| e.at(t_prev))?;
            let t = if s == steps { t_b } else { t_a + s as f64 * h };
            let nl = it.nonlocal();
            if cfg.frame == FrameMode::Comoving {
                recenter(&mut it, &nl, &mut traj.frame_shift);
            }
            traj.samples.push(Sample::from_nl(t, &nl));
        }
        if wants(t_b) {
            traj.snapshots.push(it.state(t_b));
        }
        t_a = t_b;
    }
    Ok(traj)
}

fn recenter(it: &mut Integrator, nl: &Nonlocal, total: &mut [i64]) {
    let g = it.grid();
    let mut cells = vec![0i64; g.n()];
    let mut drift2 = 0.0;
    for a in 0..g.n() {
        let center = 0.5 * (g.lo()[a] + g.hi()[a]);
        let d = nl.xbar[a] - center;
        drift2 += d * d;
        cells[a] = (d / g.dx()[a]).round() as i64;
    }
    let min_dx = g.dx().iter().copied().fold(f64::INFINITY, f64::min);
    if drift2.sqrt() > min_dx && cells.iter().any(|&c| c != 0) {
        it.shift_window(&cells);
        for (t, c) in total.iter_mut().zip(&cells) {
            *t += c;
        }
    }
}
