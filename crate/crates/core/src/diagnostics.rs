//! Trajectory fits and regime classification.
//!
//! Fits operate on the per-step mean-phenotype samples of a [`Trajectory`];
//! shape checks operate on its density snapshots.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{moments_of, Field};
use crate::solver::{Sample, SimState, Trajectory};
use crate::tolerances::DELAY_MIN_SPEED;

/// Thresholds of the regime decision tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    /// Fraction of the run, counted from the end, used for fitting.
    pub window_fraction: f64,
    pub linear_r2: f64,
    /// Minimum |c| for a traveling pulse.
    pub linear_min_speed: f64,
    pub profile_residual_max: f64,
    pub circle_r2: f64,
    pub radius_drift_max: f64,
    /// Minimum phase swept over the window for a rotation.
    pub min_swept_angle: f64,
    pub ring_score_min: f64,
    /// Relative ring-radius growth over the window separating a diffusing
    /// ring from a stationary one.
    pub ring_growth: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            window_fraction: 0.4,
            linear_r2: 0.99,
            linear_min_speed: 1e-3,
            profile_residual_max: 0.05,
            circle_r2: 0.99,
            radius_drift_max: 0.02,
            min_swept_angle: PI / 2.0,
            ring_score_min: 0.5,
            ring_growth: 0.05,
        }
    }
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "diagnostics.window_fraction: must lie in (0, 1], got {}",
                self.window_fraction
            )));
        }
        Ok(())
    }
}

/// Closed time interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub t0: f64,
    pub t1: f64,
}

impl Window {
    pub fn new(t0: f64, t1: f64) -> Self {
        Window { t0, t1 }
    }

    /// The last `fraction` of the run.
    pub fn tail(traj: &Trajectory, fraction: f64) -> Self {
        let start = traj.samples.first().map_or(0.0, |s| s.t);
        let end = traj.t_end();
        Window { t0: end - fraction * (end - start), t1: end }
    }

    pub fn halves(&self) -> (Window, Window) {
        let mid = 0.5 * (self.t0 + self.t1);
        (Window::new(self.t0, mid), Window::new(mid, self.t1))
    }
}

fn ols_slope(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        stt += (a - tm) * (a - tm);
        sty += (a - tm) * (b - ym);
        syy += (b - ym) * (b - ym);
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let r2 = if stt > 0.0 && syy > 0.0 { sty * sty / (stt * syy) } else { 0.0 };
    (slope, r2)
}

fn window_samples(traj: &Trajectory, w: Window, need: usize) -> Result<Vec<&Sample>> {
    let s = traj.window(w.t0, w.t1);
    if s.len() < need {
        return Err(Error::InsufficientSamples { need, got: s.len() });
    }
    Ok(s)
}

/// Straight-line fit of x̄(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Speed along `direction` (nonnegative by the sign convention).
    pub c: f64,
    pub direction: Vec<f64>,
    /// 1 − λ_min/λ_max of the sample covariance (n = 2), or the R² of the
    /// position-time regression (n = 1).
    pub r2: f64,
}

/// Total-least-squares line through the x̄ samples of the window; the
/// direction is oriented so that motion along it is forward in time.
pub fn fit_linear_speed(traj: &Trajectory, w: Window) -> Result<LinearFit> {
    let s = window_samples(traj, w, 10)?;
    let t: Vec<f64> = s.iter().map(|x| x.t).collect();
    let n = traj.n;
    let m = s.len() as f64;
    let cen: Vec<f64> = (0..n).map(|a| s.iter().map(|x| x.xbar[a]).sum::<f64>() / m).collect();
    let (dir, r2) = if n == 1 {
        let x: Vec<f64> = s.iter().map(|p| p.xbar[0]).collect();
        (vec![1.0], ols_slope(&t, &x).1)
    } else {
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in &s {
            let (dx, dy) = (p.xbar[0] - cen[0], p.xbar[1] - cen[1]);
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        let tr = 0.5 * (sxx + syy);
        let disc = (0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy).sqrt();
        let (lmax, lmin) = (tr + disc, (tr - disc).max(0.0));
        // Eigenvector of the larger eigenvalue.
        let v = if sxy.abs() > 0.0 {
            vec![lmax - syy, sxy]
        } else if sxx >= syy {
            vec![1.0, 0.0]
        } else {
            vec![0.0, 1.0]
        };
        let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let r2 = if lmax > 0.0 { (1.0 - lmin / lmax).clamp(0.0, 1.0) } else { 0.0 };
        (vec![v[0] / nv, v[1] / nv], r2)
    };
    let proj: Vec<f64> = s
        .iter()
        .map(|p| (0..n).map(|a| (p.xbar[a] - cen[a]) * dir[a]).sum())
        .collect();
    let (slope, _) = ols_slope(&t, &proj);
    let (c, dir) = if slope < 0.0 { (-slope, dir.iter().map(|d| -d).collect()) } else { (slope, dir) };
    Ok(LinearFit { c, direction: dir, r2 })
}

/// Mean over the window of ((x̄ − ȳ − offset)·direction)/c, where `offset`
/// is the optimum shift ℓu.
pub fn fit_delay(traj: &Trajectory, c: f64, direction: &[f64], offset: &[f64], w: Window) -> Result<f64> {
    if !(c.abs() >= DELAY_MIN_SPEED) {
        return Err(Error::UndefinedDelay(c));
    }
    let s = window_samples(traj, w, 1)?;
    let mut acc = 0.0;
    for p in &s {
        let gap: f64 = (0..traj.n).map(|a| (p.xbar[a] - p.ybar[a] - offset[a]) * direction[a]).sum();
        acc += gap / c;
    }
    Ok(acc / s.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleFit {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Angular velocity from the unwrapped phase (positive counterclockwise).
    pub omega: f64,
    /// 1 − Σ(rᵢ − R)² / Σ‖pᵢ − centroid‖².
    pub r2: f64,
    /// Total unwrapped phase covered by the window.
    pub swept: f64,
}

/// Algebraic (Kåsa) circle fit of the x̄ samples, then a linear regression
/// of the unwrapped phase about the fitted center.
pub fn fit_circle(traj: &Trajectory, w: Window) -> Result<CircleFit> {
    if traj.n != 2 {
        return Err(Error::Domain("circle fits need n = 2".into()));
    }
    let s = window_samples(traj, w, 20)?;
    let m = s.len() as f64;
    let cx = s.iter().map(|p| p.xbar[0]).sum::<f64>() / m;
    let cy = s.iter().map(|p| p.xbar[1]).sum::<f64>() / m;
    let spread2 = s.iter().map(|p| (p.xbar[0] - cx).powi(2) + (p.xbar[1] - cy).powi(2)).sum::<f64>();
    if !(spread2 > 0.0) {
        return Err(Error::CircleFitDegenerate);
    }
    let scale = (spread2 / m).sqrt();
    // Normal equations of min Σ (x² + y² + D x + E y + F)² in centered, scaled coordinates.
    let mut a = Matrix3::<f64>::zeros();
    let mut b = Vector3::<f64>::zeros();
    for p in &s {
        let x = (p.xbar[0] - cx) / scale;
        let y = (p.xbar[1] - cy) / scale;
        let row = Vector3::new(x, y, 1.0);
        a += row * row.transpose();
        b -= row * (x * x + y * y);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::CircleFitDegenerate);
    }
    let sol = svd.solve(&b, 0.0).map_err(|_| Error::CircleFitDegenerate)?;
    let (d, e, f) = (sol[0], sol[1], sol[2]);
    let r2s = 0.25 * (d * d + e * e) - f;
    if !(r2s > 0.0) {
        return Err(Error::CircleFitDegenerate);
    }
    let center = vec![cx - 0.5 * d * scale, cy - 0.5 * e * scale];
    let radius = r2s.sqrt() * scale;
    let mut ss = 0.0;
    let mut phase = Vec::with_capacity(s.len());
    let mut prev: Option<f64> = None;
    for p in &s {
        let (dx, dy) = (p.xbar[0] - center[0], p.xbar[1] - center[1]);
        let r = (dx * dx + dy * dy).sqrt();
        ss += (r - radius) * (r - radius);
        let mut ph = dy.atan2(dx);
        if let Some(q) = prev {
            while ph - q > PI {
                ph -= 2.0 * PI;
            }
            while ph - q < -PI {
                ph += 2.0 * PI;
            }
        }
        prev = Some(ph);
        phase.push(ph);
    }
    let t: Vec<f64> = s.iter().map(|p| p.t).collect();
    let (omega, _) = ols_slope(&t, &phase);
    let swept = (phase[phase.len() - 1] - phase[0]).abs();
    let r2 = (1.0 - ss / spread2).clamp(0.0, 1.0);
    Ok(CircleFit { center, radius, omega, r2, swept })
}

/// 1 − f(x̄)/max f: near 0 for a blob peaked at its mean, near 1 when the
/// mean sits in a hole of the density.
pub fn ring_score(f: &Field) -> Result<f64> {
    let m = moments_of(f.grid(), f.values());
    let mean = m.mean("field")?;
    let max = f.max();
    Ok(1.0 - f.interpolate(&mean) / max)
}

/// Mass-weighted mean distance of the density from its own mean.
pub fn ring_radius(f: &Field) -> Result<f64> {
    let m = moments_of(f.grid(), f.values());
    let mean = m.mean("field")?;
    let g = f.grid();
    let r: Vec<f64> = (0..g.len())
        .map(|i| {
            let z = g.point(i);
            let d: f64 = z.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum();
            d.sqrt() * f.values()[i]
        })
        .collect();
    Ok(moments_of(g, &r).mass / m.mass)
}

/// L¹ distance between mass-normalized `b` and mass-normalized `a`
/// translated by `shift`, evaluated on the nodes of `b`.
fn translated_l1(a: &Field, b: &Field, shift: &[f64]) -> Result<f64> {
    let ma = moments_of(a.grid(), a.values()).mass;
    let mb = moments_of(b.grid(), b.values()).mass;
    if !(ma > 0.0) || !(mb > 0.0) {
        return Err(Error::DegenerateMass { field: "snapshot", mass: ma.min(mb) });
    }
    let g = b.grid();
    let diff: Vec<f64> = (0..g.len())
        .map(|i| {
            let z = g.point(i);
            let zs: Vec<f64> = z.iter().zip(shift).map(|(x, s)| x - s).collect();
            (b.values()[i] / mb - a.interpolate(&zs) / ma).abs()
        })
        .collect();
    Ok(moments_of(g, &diff).mass)
}

/// Average L¹ change of the normalized host and pathogen profiles between
/// consecutive snapshots after undoing a translation at speed `c` along
/// `direction`. The larger of the two species' averages is returned.
pub fn profile_constancy(snapshots: &[&SimState], c: f64, direction: &[f64]) -> Result<f64> {
    if snapshots.len() < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: snapshots.len() });
    }
    let mut acc_h = 0.0;
    let mut acc_p = 0.0;
    for w in snapshots.windows(2) {
        let dt = w[1].t() - w[0].t();
        let shift: Vec<f64> = direction.iter().map(|d| c * dt * d).collect();
        acc_h += translated_l1(w[0].h(), w[1].h(), &shift)?;
        acc_p += translated_l1(w[0].p(), w[1].p(), &shift)?;
    }
    let k = (snapshots.len() - 1) as f64;
    Ok((acc_h / k).max(acc_p / k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    RingDiffusing,
    RingStationary,
    LinearPulse,
    RotatingPulse,
    Undetermined,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::RingDiffusing => "ring-diffusing",
            Regime::RingStationary => "ring-stationary",
            Regime::LinearPulse => "linear-pulse",
            Regime::RotatingPulse => "rotating-pulse",
            Regime::Undetermined => "undetermined",
        }
    }
}

/// Fitted quantities and the regime verdict of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseReport {
    pub regime: Regime,
    pub window: Window,
    pub c_fit: f64,
    pub direction: Vec<f64>,
    pub delay_fit: Option<f64>,
    pub radius_fit: Option<f64>,
    pub omega_fit: Option<f64>,
    /// Goodness of fit of the model behind the verdict (line or circle).
    pub r2: f64,
    pub line_r2: f64,
    pub circle_r2: Option<f64>,
    pub radius_drift: Option<f64>,
    pub omega_drift: Option<f64>,
    pub swept_angle: Option<f64>,
    pub profile_residual: Option<f64>,
    pub ring_score: Option<f64>,
    pub ring_growth: Option<f64>,
    pub thresholds: ClassifyConfig,
}

fn rel_drift(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a.abs() + b.abs());
    if m > 0.0 {
        (a - b).abs() / m
    } else {
        0.0
    }
}

/// Decision tree: rotation, then straight-line pulse, then ring; otherwise
/// undetermined. `offset` is ℓu, used for the delay.
pub fn classify(traj: &Trajectory, offset: &[f64], cfg: &ClassifyConfig) -> Result<PulseReport> {
    let w = Window::tail(traj, cfg.window_fraction);
    let lin = fit_linear_speed(traj, w)?;
    let mut rep = PulseReport {
        regime: Regime::Undetermined,
        window: w,
        c_fit: lin.c,
        direction: lin.direction.clone(),
        delay_fit: None,
        radius_fit: None,
        omega_fit: None,
        r2: lin.r2,
        line_r2: lin.r2,
        circle_r2: None,
        radius_drift: None,
        omega_drift: None,
        swept_angle: None,
        profile_residual: None,
        ring_score: None,
        ring_growth: None,
        thresholds: cfg.clone(),
    };
    let snaps: Vec<&SimState> = traj.snapshots.iter().filter(|s| s.t() >= w.t0 - 1e-12).collect();
    if lin.c >= DELAY_MIN_SPEED {
        rep.delay_fit = fit_delay(traj, lin.c, &lin.direction, offset, w).ok();
    }
    if snaps.len() >= 2 {
        rep.profile_residual = profile_constancy(&snaps, lin.c, &lin.direction).ok();
    }
    if let Some(last) = traj.snapshots.last() {
        rep.ring_score = ring_score(last.h()).ok();
        // With a single snapshot in the window, measure growth from the one
        // before it.
        let first = if snaps.len() >= 2 {
            snaps.first().copied()
        } else {
            traj.snapshots.iter().rev().nth(1).or(traj.snapshots.first())
        };
        if let Some(first) = first {
            if first.t() < last.t() {
                if let (Ok(a), Ok(b)) = (ring_radius(first.h()), ring_radius(last.h())) {
                    rep.ring_growth = Some((b - a) / a);
                }
            }
        }
    }

    if traj.n == 2 {
        if let Ok(full) = fit_circle(traj, w) {
            rep.circle_r2 = Some(full.r2);
            rep.radius_fit = Some(full.radius);
            rep.omega_fit = Some(full.omega);
            rep.swept_angle = Some(full.swept);
            let (w1, w2) = w.halves();
            if let (Ok(a), Ok(b)) = (fit_circle(traj, w1), fit_circle(traj, w2)) {
                rep.radius_drift = Some(rel_drift(a.radius, b.radius));
                rep.omega_drift = Some(rel_drift(a.omega, b.omega));
            }
            let rotating = full.r2 >= cfg.circle_r2
                && full.swept >= cfg.min_swept_angle
                && rep.radius_drift.is_some_and(|d| d < cfg.radius_drift_max);
            if rotating {
                rep.regime = Regime::RotatingPulse;
                rep.r2 = full.r2;
                return Ok(rep);
            }
        }
    }
    let linear = lin.r2 >= cfg.linear_r2
        && lin.c >= cfg.linear_min_speed
        && rep.profile_residual.is_some_and(|r| r < cfg.profile_residual_max);
    if linear {
        rep.regime = Regime::LinearPulse;
        return Ok(rep);
    }
    if rep.ring_score.is_some_and(|s| s > cfg.ring_score_min) {
        rep.regime = if rep.ring_growth.is_some_and(|g| g > cfg.ring_growth) {
            Regime::RingDiffusing
        } else {
            Regime::RingStationary
        };
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn traj_from(f: impl Fn(f64) -> ([f64; 2], [f64; 2]), n: usize, dt: f64) -> Trajectory {
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                let (x, y) = f(t);
                Sample { t, h_mass: 1.0, p_mass: 1.0, xbar: x.to_vec(), ybar: y.to_vec() }
            })
            .collect();
        Trajectory::from_samples(2, samples).unwrap()
    }

    #[test]
    fn exact_line() {
        let tr = traj_from(|t| ([0.1 * t, 0.0], [0.0, 0.0]), 100, 0.1);
        let f = fit_linear_speed(&tr, Window::new(0.0, 10.0)).unwrap();
        assert!((f.c - 0.1).abs() < 1e-12);
        assert!((f.direction[0] - 1.0).abs() < 1e-12 && f.direction[1].abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_rejected_as_line() {
        let tr = traj_from(|t| ([2.0 * (0.5 * t).cos(), 2.0 * (0.5 * t).sin()], [0.0; 2]), 400, 0.05);
        let f = fit_linear_speed(&tr, Window::new(0.0, 20.0)).unwrap();
        assert!(f.r2 < 0.5, "r2 = {}", f.r2);
    }

    #[test]
    fn exact_circle() {
        let tr = traj_from(|t| ([1.0 + 2.0 * (0.5 * t).cos(), -0.5 + 2.0 * (0.5 * t).sin()], [0.0; 2]), 400, 0.05);
        let c = fit_circle(&tr, Window::new(0.0, 20.0)).unwrap();
        assert!((c.radius - 2.0).abs() < 1e-8);
        assert!((c.omega - 0.5).abs() < 1e-8);
        assert!((c.center[0] - 1.0).abs() < 1e-8 && (c.center[1] + 0.5).abs() < 1e-8);
        assert!(c.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn collinear_circle_fit_degenerate() {
        let tr = traj_from(|t| ([0.1 * t, 0.2 * t], [0.0; 2]), 100, 0.1);
        assert!(matches!(fit_circle(&tr, Window::new(0.0, 10.0)), Err(Error::CircleFitDegenerate)));
    }

    #[test]
    fn delay_inversion() {
        let (c, tau, ell) = (0.3, 1.5811, 0.05);
        let tr = traj_from(|t| ([c * t, 0.0], [c * (t - tau) - ell, 0.0]), 100, 0.1);
        let d = fit_delay(&tr, c, &[1.0, 0.0], &[ell, 0.0], Window::new(0.0, 10.0)).unwrap();
        assert!((d - tau).abs() < 1e-12);
        assert!(matches!(fit_delay(&tr, 0.0, &[1.0, 0.0], &[0.0, 0.0], Window::new(0.0, 1.0)), Err(Error::UndefinedDelay(_))));
    }

    #[test]
    fn too_few_samples() {
        let tr = traj_from(|t| ([t, 0.0], [0.0; 2]), 5, 0.1);
        assert!(matches!(fit_linear_speed(&tr, Window::new(0.0, 1.0)), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn ring_scores() {
        let g = Grid::cube(2, 5.0, 101).unwrap();
        let blob = Field::gaussian(g.clone(), 1.0, &[0.3, 0.0], 0.5);
        assert!(ring_score(&blob).unwrap().abs() < 1e-3);
        let ring = Field::from_fn(g, |z| {
            let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
            if (1.0..2.0).contains(&r) { 1.0 } else { 0.0 }
        });
        assert_eq!(ring_score(&ring).unwrap(), 1.0);
    }

    #[test]
    fn translated_profiles_are_constant() {
        let g = Grid::cube(2, 5.0, 101).unwrap();
        let mk = |t: f64| {
            let c = [0.2 * t, 0.0];
            let h = Field::gaussian(g.clone(), 2.0, &c, 0.6);
            let p = Field::gaussian(g.clone(), 1.0, &[c[0] - 0.3, 0.0], 0.6);
            SimState::new(t, h, p).unwrap()
        };
        let s = [mk(0.0), mk(1.0), mk(2.0)];
        let refs: Vec<&SimState> = s.iter().collect();
        let r = profile_constancy(&refs, 0.2, &[1.0, 0.0]).unwrap();
        assert!(r < 5e-3, "residual {r}");
        let wrong = profile_constancy(&refs, 0.0, &[1.0, 0.0]).unwrap();
        assert!(wrong > 10.0 * r);
    }

    #[test]
    fn ring_growth_uses_snapshot_before_a_sparse_window() {
        let g = Grid::cube(2, 5.0, 101).unwrap();
        let annulus = |t: f64, r0: f64| {
            let h = Field::from_fn(g.clone(), |z| {
                let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
                (-(r - r0) * (r - r0) / 0.1).exp()
            });
            SimState::new(t, h, Field::gaussian(g.clone(), 1.0, &[0.0, 0.0], 0.3)).unwrap()
        };
        let mut tr = traj_from(|_| ([0.0, 0.0], [0.0, 0.0]), 201, 0.1);
        tr.snapshots = vec![annulus(10.0, 1.5), annulus(20.0, 3.0)];
        let rep = classify(&tr, &[0.0, 0.0], &ClassifyConfig::default()).unwrap();
        assert!(rep.ring_growth.unwrap() > 0.5, "{:?}", rep.ring_growth);
        assert_eq!(rep.regime, Regime::RingDiffusing);
    }
}
