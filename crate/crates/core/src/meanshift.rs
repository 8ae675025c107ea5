//! The mean shift fixed-point iteration.
//!
//! The update map is `m(y) = sum_i x_i g(u_i) / sum_i g(u_i)` with
//! `u_i = ((y - x_i)/h)^2`, and the mean shift scalar is `m(y) - y`.
//! [`run`] iterates `m` from a start until two consecutive estimates are
//! closer than `epsilon`.

use serde::Serialize;

use crate::density::DensityModel;
use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.0005;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

/// Relative step used by [`map_derivative`] when the caller has no
/// preference: `fd_step = DEFAULT_FD_STEP_FACTOR * h`.
pub const DEFAULT_FD_STEP_FACTOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationConfig {
    /// Stop once `|y_{j+1} - y_j| < epsilon`.
    pub epsilon: f64,
    /// Cap on the number of updates.
    pub max_iterations: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            epsilon: DEFAULT_EPSILON,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl IterationConfig {
    pub fn new(epsilon: f64, max_iterations: usize) -> Result<Self> {
        let config = IterationConfig {
            epsilon,
            max_iterations,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    DegenerateWeights,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iterations",
            Termination::DegenerateWeights => "degenerate_weights",
        }
    }
}

/// One recorded mode estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step {
    pub y: f64,
    pub f_hat: f64,
    pub f_hat_prime: f64,
    /// `|y_{j+1} - y_j|`; `None` on the last record.
    pub step: Option<f64>,
}

/// The mode estimate sequence `y_1, y_2, ...` with per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub start: f64,
    pub epsilon: f64,
    pub steps: Vec<Step>,
    pub terminated_by: Termination,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Number of updates applied (records minus one).
    pub fn updates(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn is_converged(&self) -> bool {
        self.terminated_by == Termination::Converged
    }

    pub fn final_estimate(&self) -> f64 {
        self.steps.last().map_or(self.start, |s| s.y)
    }

    pub fn ys(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.y).collect()
    }

    /// The last defined step size.
    pub fn final_step(&self) -> Option<f64> {
        self.steps.iter().rev().find_map(|s| s.step)
    }

    /// Estimate at 1-based iteration `j`, if the run got that far.
    pub fn estimate_at(&self, j: usize) -> Option<f64> {
        j.checked_sub(1)
            .and_then(|i| self.steps.get(i))
            .map(|s| s.y)
    }
}

/// `m(x) - x`: displacement from `x` to the weighted sample mean.
pub fn mean_shift_scalar(model: &DensityModel, x: f64) -> Result<f64> {
    Ok(model.weighted_mean(x)? - x)
}

/// `y + m_{h,g}(y)`, i.e. the `g`-weighted mean of the samples.
pub fn mode_update(model: &DensityModel, y: f64) -> Result<f64> {
    model.weighted_mean(y)
}

/// Iterates [`mode_update`] from `start`.
///
/// Degenerate weights end the run early; the steps gathered so far are
/// returned with [`Termination::DegenerateWeights`].
pub fn run(model: &DensityModel, start: f64, config: &IterationConfig) -> Result<Trajectory> {
    config.validate()?;
    if !start.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "start must be finite, got {start}"
        )));
    }

    let record = |y: f64, step: Option<f64>| Step {
        y,
        f_hat: model.density_at(y),
        f_hat_prime: model.density_gradient_at(y),
        step,
    };

    let mut steps = Vec::new();
    let mut y = start;
    let mut updates = 0;
    let terminated_by = loop {
        if updates == config.max_iterations {
            steps.push(record(y, None));
            break Termination::MaxIterations;
        }
        match mode_update(model, y) {
            Ok(next) => {
                let size = (next - y).abs();
                steps.push(record(y, Some(size)));
                updates += 1;
                y = next;
                if size < config.epsilon {
                    steps.push(record(y, None));
                    break Termination::Converged;
                }
            }
            Err(Error::DegenerateWeights { .. }) => {
                steps.push(record(y, None));
                break Termination::DegenerateWeights;
            }
            Err(e) => return Err(e),
        }
    };

    Ok(Trajectory {
        start,
        epsilon: config.epsilon,
        steps,
        terminated_by,
    })
}

/// Central-difference estimate of `m'(x)`.
pub fn map_derivative(model: &DensityModel, x: f64, fd_step: f64) -> Result<f64> {
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step must be positive, got {fd_step}"
        )));
    }
    // The centre must carry weight too, even though the stencil skips it.
    model.weighted_mean(x)?;
    let ahead = mode_update(model, x + fd_step)?;
    let behind = mode_update(model, x - fd_step)?;
    Ok((ahead - behind) / (2.0 * fd_step))
}

pub fn default_fd_step(model: &DensityModel) -> f64 {
    DEFAULT_FD_STEP_FACTOR * model.bandwidth()
}

/// Keeps iterating `map` from `y` until a step is no longer than
/// `tol * max(1, |y|)` or `max_iterations` updates have been made.
///
/// A run stopped at `epsilon` sits up to about `epsilon m'/(1 - m')` short
/// of the fixed point; this recovers the fixed point itself for checks that
/// need `x* = m(x*)`.
pub fn refine_limit<M: FixedPointMap + ?Sized>(
    map: &M,
    y: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<f64> {
    let mut y = y;
    for _ in 0..max_iterations {
        let next = map.apply(y)?;
        let size = (next - y).abs();
        y = next;
        if size <= tol * y.abs().max(1.0) {
            break;
        }
    }
    Ok(y)
}

pub const REFINE_TOLERANCE: f64 = 1e-13;

/// A scalar map iterated as `y_{j+1} = m(y_j)`.
///
/// The diagnostics only need the map and its derivative, so they accept any
/// implementor; [`DensityModel`] is the production one.
pub trait FixedPointMap {
    fn apply(&self, y: f64) -> Result<f64>;
    fn derivative(&self, y: f64) -> Result<f64>;
}

impl FixedPointMap for DensityModel {
    fn apply(&self, y: f64) -> Result<f64> {
        mode_update(self, y)
    }

    fn derivative(&self, y: f64) -> Result<f64> {
        map_derivative(self, y, default_fd_step(self))
    }
}
