//! Numerical thresholds shared across modules, in one place.

/// Largest tolerated negative density, relative to the field maximum.
pub const NEGATIVITY_REL_TOL: f64 = 1e-8;

/// Safety factor on the explicit diffusion step limit.
pub const CFL_SAFETY: f64 = 0.4;

/// Bound on dt times the stiffest real rate, about 90% of the RK4 real-axis
/// stability interval (2.785).
pub const RK4_REAL_STABILITY: f64 = 2.5;

/// Default standard deviation of the initial Gaussian blobs.
pub const DEFAULT_BLOB_STD: f64 = 0.2;

/// Box half-width in units of the widest analytic Gaussian std.
pub const BOX_STDS_ANALYTIC: f64 = 8.0;

/// Box margin around initial centers, in initial stds.
pub const BOX_STDS_INITIAL: f64 = 6.0;

/// Stationary bisection stops once |λ_P| falls below this.
pub const STATIONARY_LAMBDA_TOL: f64 = 1e-8;

/// Relative residual at which the principal eigenpair is accepted.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-11;

/// Truncation tolerance for coefficient series.
pub const SERIES_TAIL_TOL: f64 = 1e-12;

/// Speeds below this leave the delay undefined.
pub const DELAY_MIN_SPEED: f64 = 1e-6;

/// Relative slack when comparing a generalized binomial bound in floating point.
pub const BINOM_LOG_SLACK: f64 = 1e-12;

/// √5 − 2: upper limit of the admissible θ̄ range for the series bounds.
pub fn theta_bar_limit() -> f64 {
    5f64.sqrt() - 2.0
}
