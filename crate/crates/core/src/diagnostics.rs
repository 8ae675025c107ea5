//! Runtime checks of the convergence properties of a mean shift trajectory.
//!
//! * density ascent: `f(y_{j+1}) >= f(y_j)`;
//! * the step lower bound `f(y_{j+1}) - f(y_j) >= c/h^3 * (y_{j+1} - y_j)^2 * phi`
//!   with `phi = g(d^2/h^2)` and `d` the sample diameter;
//! * a monotone tail `y_N, y_{N+1}, ...`;
//! * a vanishing density gradient at the final estimate;
//! * classification of the limit by `|m'(x*)|`;
//! * the error-ratio bound `e_{j+1}/e_j = |m'(delta)|` for some `delta`
//!   between `y_j` and `x*`.
//!
//! Limits cannot be observed on a finite run, so each of these is checked on
//! the recorded values against the thresholds in [`DiagnosticsConfig`].

use serde::Serialize;

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::meanshift::{
    default_fd_step, map_derivative, refine_limit, FixedPointMap, Termination, Trajectory,
    DEFAULT_MAX_ITERATIONS, REFINE_TOLERANCE,
};

pub const ASCENT_SLACK: f64 = 1e-12;
pub const INEQUALITY_SLACK: f64 = 1e-12;
pub const RATIO_SLACK: f64 = 0.05;
pub const MARGINAL_BAND: f64 = 0.05;
/// Pairs with `e_j < NOISE_FLOOR_FACTOR * epsilon` are not ratio-checked.
pub const NOISE_FLOOR_FACTOR: f64 = 10.0;
pub const RATIO_DERIVATIVE_SAMPLES: usize = 33;
pub const GRADIENT_TOL_FACTOR: f64 = 1e-2;
pub const GRADIENT_TOL_FLOOR: f64 = 1e-6;

/// Slack and tolerance table for every check in this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsConfig {
    pub ascent_slack: f64,
    pub inequality_slack: f64,
    pub ratio_slack: f64,
    /// Half-width `tau` of the marginal band around `|m'| = 1`.
    pub marginal_band: f64,
    pub noise_floor_factor: f64,
    pub ratio_derivative_samples: usize,
    pub gradient_tol_factor: f64,
    pub gradient_tol_floor: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            ascent_slack: ASCENT_SLACK,
            inequality_slack: INEQUALITY_SLACK,
            ratio_slack: RATIO_SLACK,
            marginal_band: MARGINAL_BAND,
            noise_floor_factor: NOISE_FLOOR_FACTOR,
            ratio_derivative_samples: RATIO_DERIVATIVE_SAMPLES,
            gradient_tol_factor: GRADIENT_TOL_FACTOR,
            gradient_tol_floor: GRADIENT_TOL_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AscentCheck {
    pub holds: bool,
    /// 1-based `j` of the first pair with `f(y_{j+1}) < f(y_j) - slack`.
    pub first_violation: Option<usize>,
}

/// Checks that the recorded density values never decrease by more than `slack`.
pub fn check_density_ascent(traj: &Trajectory, slack: f64) -> Result<AscentCheck> {
    if traj.len() < 2 {
        return Err(Error::TrajectoryTooShort {
            len: traj.len(),
            needed: 2,
        });
    }
    let first_violation = traj
        .steps
        .windows(2)
        .position(|w| w[1].f_hat < w[0].f_hat - slack)
        .map(|i| i + 1);
    Ok(AscentCheck {
        holds: first_violation.is_none(),
        first_violation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepInequalityRecord {
    /// 1-based index of `y_j` in the pair `(y_j, y_{j+1})`.
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `phi = g(d^2 / h^2)`, a lower bound on every kernel weight once the
/// iterate is inside the sample hull.
pub fn phi(model: &DensityModel) -> f64 {
    let ratio = model.samples().d_max() / model.bandwidth();
    model.profile().g(ratio * ratio)
}

/// Lower bound on the density gain of a step of length `dy`:
/// `c/h^3 * dy^2 * phi`.
///
/// The cube follows from the `1/(n h)` normalization of the one-dimensional
/// estimate: convexity of `k` gives a gain of at least
/// `c/(n h^3) * dy^2 * sum_i g(u_i)`, and each weight is at least `phi`.
pub fn step_lower_bound(model: &DensityModel, dy: f64) -> f64 {
    let h = model.bandwidth();
    model.profile().norm_const_1d() / (h * h * h) * dy * dy * phi(model)
}

/// One record per consecutive pair of the trajectory.
pub fn check_step_inequality(
    traj: &Trajectory,
    model: &DensityModel,
    slack: f64,
) -> Vec<StepInequalityRecord> {
    if !model.profile().convex_profile() {
        log::warn!(
            "profile `{}` is not declared convex; the step bound need not hold",
            model.profile().name()
        );
    }
    traj.steps
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let lhs = w[1].f_hat - w[0].f_hat;
            let rhs = step_lower_bound(model, w[1].y - w[0].y);
            StepInequalityRecord {
                j: i + 1,
                lhs,
                rhs,
                holds: lhs >= rhs - slack,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MonotoneTailReport {
    /// Smallest 1-based `N` with `y_N, y_{N+1}, ...` monotone.
    pub tail_start: usize,
    pub direction: Direction,
    pub is_fully_monotone: bool,
    pub tail_len: usize,
}

pub fn detect_monotone_tail(traj: &Trajectory) -> MonotoneTailReport {
    monotone_tail(&traj.ys())
}

/// Monotone-tail detection on a bare sequence. Ties count for both
/// directions; an empty sequence is reported as a constant tail of length 0.
pub fn monotone_tail(ys: &[f64]) -> MonotoneTailReport {
    if ys.is_empty() {
        return MonotoneTailReport {
            tail_start: 1,
            direction: Direction::Constant,
            is_fully_monotone: true,
            tail_len: 0,
        };
    }
    // 0-based starts of the longest non-decreasing / non-increasing suffixes.
    let suffix_start = |ok: fn(f64, f64) -> bool| {
        let mut start = ys.len() - 1;
        while start > 0 && ok(ys[start - 1], ys[start]) {
            start -= 1;
        }
        start
    };
    let up = suffix_start(|a, b| a <= b);
    let down = suffix_start(|a, b| a >= b);
    let start = up.min(down);
    let tail = &ys[start..];
    let direction = if tail.windows(2).all(|w| w[0] == w[1]) {
        Direction::Constant
    } else if up <= down {
        Direction::Increasing
    } else {
        Direction::Decreasing
    };
    MonotoneTailReport {
        tail_start: start + 1,
        direction,
        is_fully_monotone: start == 0,
        tail_len: ys.len() - start,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientLimitCheck {
    pub holds: bool,
    pub gradient: f64,
    pub tolerance: f64,
}

/// `|f'(y_final)| < tol` for a converged trajectory.
///
/// With `tol = None` the tolerance is `factor * max_j |f'(y_j)|`, floored.
pub fn check_gradient_at_limit(
    traj: &Trajectory,
    tol: Option<f64>,
    config: &DiagnosticsConfig,
) -> Result<GradientLimitCheck> {
    if traj.terminated_by != Termination::Converged {
        return Err(Error::Inapplicable("trajectory did not converge"));
    }
    Ok(gradient_at_end(traj, tol, config))
}

/// Same test as [`check_gradient_at_limit`] without the convergence
/// precondition.
pub fn gradient_at_end(
    traj: &Trajectory,
    tol: Option<f64>,
    config: &DiagnosticsConfig,
) -> GradientLimitCheck {
    let tolerance = tol.unwrap_or_else(|| default_gradient_tolerance(traj, config));
    let gradient = traj.steps.last().map_or(0.0, |s| s.f_hat_prime);
    GradientLimitCheck {
        holds: gradient.abs() < tolerance,
        gradient,
        tolerance,
    }
}

pub fn default_gradient_tolerance(traj: &Trajectory, config: &DiagnosticsConfig) -> f64 {
    let peak = traj
        .steps
        .iter()
        .map(|s| s.f_hat_prime.abs())
        .fold(0.0, f64::max);
    (config.gradient_tol_factor * peak).max(config.gradient_tol_floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    /// `|m'| < 1 - tau`
    Attracting,
    /// `|m'| > 1 + tau`
    Repelling,
    Marginal,
}

pub fn stability_class(map_derivative_abs: f64, tau: f64) -> StabilityClass {
    if map_derivative_abs < 1.0 - tau {
        StabilityClass::Attracting
    } else if map_derivative_abs > 1.0 + tau {
        StabilityClass::Repelling
    } else {
        StabilityClass::Marginal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub location: f64,
    pub map_derivative_abs: f64,
    pub stability_class: StabilityClass,
    pub gradient_at_limit: f64,
}

pub fn classify_fixed_point(
    model: &DensityModel,
    x_star: f64,
    tau: f64,
) -> Result<FixedPointReport> {
    let map_derivative_abs = map_derivative(model, x_star, default_fd_step(model))?.abs();
    Ok(FixedPointReport {
        location: x_star,
        map_derivative_abs,
        stability_class: stability_class(map_derivative_abs, tau),
        gradient_at_limit: model.density_gradient_at(x_star),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioViolation {
    pub j: usize,
    pub ratio: f64,
    pub min_derivative_abs: f64,
    pub max_derivative_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioBoundReport {
    pub holds: bool,
    pub checked_pairs: usize,
    pub first_violation: Option<RatioViolation>,
}

/// Checks `e_{j+1}/e_j` against the range of `|m'|` between `y_j` and
/// `x_star` for the mean shift map of `model`.
///
/// `x_star` must be the fixed point itself, not the estimate the run
/// stopped at; see [`refine_limit`].
pub fn check_convergence_ratio(
    model: &DensityModel,
    traj: &Trajectory,
    x_star: f64,
    config: &DiagnosticsConfig,
) -> Result<RatioBoundReport> {
    if traj.terminated_by != Termination::Converged {
        return Err(Error::Inapplicable("trajectory did not converge"));
    }
    check_error_ratio_bound(
        model,
        &traj.ys(),
        x_star,
        config.noise_floor_factor * traj.epsilon,
        config,
    )
}

/// Map-generic form of [`check_convergence_ratio`].
///
/// For each pair with `e_j >= noise_floor`, `|m'|` is sampled at
/// `config.ratio_derivative_samples` interior points of the segment from
/// `y_j` to `x_star`, and the ratio must fall in
/// `[min (1 - slack), max (1 + slack)]`.
pub fn check_error_ratio_bound<M: FixedPointMap + ?Sized>(
    map: &M,
    ys: &[f64],
    x_star: f64,
    noise_floor: f64,
    config: &DiagnosticsConfig,
) -> Result<RatioBoundReport> {
    let samples = config.ratio_derivative_samples.max(1);
    let mut checked_pairs = 0;
    let mut first_violation = None;
    for (i, pair) in ys.windows(2).enumerate() {
        let e_now = (x_star - pair[0]).abs();
        if e_now < noise_floor || e_now == 0.0 {
            continue;
        }
        let ratio = (x_star - pair[1]).abs() / e_now;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 1..=samples {
            let t = pair[0] + (x_star - pair[0]) * k as f64 / (samples + 1) as f64;
            let d = map.derivative(t)?.abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        checked_pairs += 1;
        let ok =
            ratio >= lo * (1.0 - config.ratio_slack) && ratio <= hi * (1.0 + config.ratio_slack);
        if !ok && first_violation.is_none() {
            first_violation = Some(RatioViolation {
                j: i + 1,
                ratio,
                min_derivative_abs: lo,
                max_derivative_abs: hi,
            });
        }
    }
    Ok(RatioBoundReport {
        holds: first_violation.is_none(),
        checked_pairs,
        first_violation,
    })
}

/// Every check for one trajectory, as emitted in `diagnostics.json`.
/// Checks whose preconditions fail are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryDiagnostics {
    pub start: f64,
    pub terminated_by: Termination,
    pub updates: usize,
    pub final_estimate: f64,
    pub monotone_convergence_guaranteed: bool,
    pub density_ascent: Option<AscentCheck>,
    pub step_inequality: Option<StepInequalitySummary>,
    pub monotone_tail: MonotoneTailReport,
    pub gradient_at_limit: Option<GradientLimitCheck>,
    pub fixed_point: Option<FixedPointReport>,
    pub error_ratio: Option<RatioBoundReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepInequalitySummary {
    pub holds: bool,
    pub records: usize,
    pub phi: f64,
    pub first_violation: Option<StepInequalityRecord>,
}

pub fn diagnose(
    model: &DensityModel,
    traj: &Trajectory,
    config: &DiagnosticsConfig,
) -> TrajectoryDiagnostics {
    let records = check_step_inequality(traj, model, config.inequality_slack);
    let step_inequality = (!records.is_empty()).then(|| StepInequalitySummary {
        holds: records.iter().all(|r| r.holds),
        records: records.len(),
        phi: phi(model),
        first_violation: records.iter().find(|r| !r.holds).copied(),
    });
    let x_star = traj.final_estimate();
    let converged = traj.is_converged();
    TrajectoryDiagnostics {
        start: traj.start,
        terminated_by: traj.terminated_by,
        updates: traj.updates(),
        final_estimate: x_star,
        monotone_convergence_guaranteed: model.profile().guarantees_monotone_convergence(),
        density_ascent: check_density_ascent(traj, config.ascent_slack).ok(),
        step_inequality,
        monotone_tail: detect_monotone_tail(traj),
        gradient_at_limit: check_gradient_at_limit(traj, None, config).ok(),
        fixed_point: converged
            .then(|| classify_fixed_point(model, x_star, config.marginal_band).ok())
            .flatten(),
        error_ratio: converged
            .then(|| {
                let limit =
                    refine_limit(model, x_star, REFINE_TOLERANCE, DEFAULT_MAX_ITERATIONS).ok()?;
                check_convergence_ratio(model, traj, limit, config).ok()
            })
            .flatten(),
    }
}
