//! Kernel density estimate and its analytic derivative.
//!
//! All sums run over the samples in ascending value order, independent of the
//! order the caller supplied them in, so every evaluation is bit-identical
//! under permutation of the input. Sets with at least
//! [`COMPENSATED_MIN_LEN`] points use compensated summation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelProfile;

/// Sample count from which sums switch to compensated accumulation.
pub const COMPENSATED_MIN_LEN: usize = 10_000;

/// Immutable one-dimensional data set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    points: Vec<f64>,
    #[serde(skip)]
    sorted: Vec<f64>,
    d_max: f64,
}

impl SampleSet {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySamples);
        }
        if let Some(&bad) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::NonFiniteSample(bad));
        }
        let mut sorted = points.clone();
        sorted.sort_by(f64::total_cmp);
        let d_max = sorted[sorted.len() - 1] - sorted[0];
        Ok(SampleSet {
            points,
            sorted,
            d_max,
        })
    }

    /// Points in the order they were supplied.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Points in ascending order.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    /// Largest pairwise distance, `max - min`.
    pub fn d_max(&self) -> f64 {
        self.d_max
    }
}

/// Running sum, Neumaier-compensated on request.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Accumulator {
    sum: f64,
    carry: f64,
    compensated: bool,
}

impl Accumulator {
    pub(crate) fn new(compensated: bool) -> Self {
        Accumulator {
            sum: 0.0,
            carry: 0.0,
            compensated,
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        if !self.compensated {
            self.sum += v;
            return;
        }
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// A sample set, a profile and a bandwidth: everything needed to evaluate
/// `f(x) = c/(n h) * sum_i k(((x - x_i)/h)^2)`.
#[derive(Debug, Clone)]
pub struct DensityModel {
    samples: SampleSet,
    profile: KernelProfile,
    bandwidth: f64,
}

impl DensityModel {
    pub fn new(samples: SampleSet, profile: KernelProfile, bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(DensityModel {
            samples,
            profile,
            bandwidth,
        })
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn profile(&self) -> &KernelProfile {
        &self.profile
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Same samples and profile, different bandwidth.
    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        DensityModel::new(self.samples.clone(), self.profile.clone(), bandwidth)
    }

    fn compensated(&self) -> bool {
        self.samples.len() >= COMPENSATED_MIN_LEN
    }

    #[inline]
    fn scaled_sq(&self, x: f64, xi: f64) -> f64 {
        let u = (x - xi) / self.bandwidth;
        u * u
    }

    fn prefactor(&self) -> f64 {
        self.profile.norm_const_1d() / (self.samples.len() as f64 * self.bandwidth)
    }

    /// Density estimate at `x`.
    pub fn density_at(&self, x: f64) -> f64 {
        let mut acc = Accumulator::new(self.compensated());
        for &xi in self.samples.sorted() {
            acc.add(self.profile.k(self.scaled_sq(x, xi)));
        }
        self.prefactor() * acc.value()
    }

    /// Analytic derivative `f'(x) = c/(n h) * sum_i g(u_i) * 2 (x_i - x) / h^2`.
    pub fn density_gradient_at(&self, x: f64) -> f64 {
        let mut acc = Accumulator::new(self.compensated());
        for &xi in self.samples.sorted() {
            acc.add(self.profile.g(self.scaled_sq(x, xi)) * (xi - x));
        }
        self.prefactor() * 2.0 * acc.value() / (self.bandwidth * self.bandwidth)
    }

    /// Sum of the weights `g(((x - x_i)/h)^2)`.
    pub fn weight_sum(&self, x: f64) -> f64 {
        let mut acc = Accumulator::new(self.compensated());
        for &xi in self.samples.sorted() {
            acc.add(self.profile.g(self.scaled_sq(x, xi)));
        }
        acc.value()
    }

    /// The `g`-weighted mean of the samples as seen from `x`.
    ///
    /// Offsets are taken from the smallest sample, which makes the result
    /// exact for a single distinct point and keeps it inside `[min, max]`.
    pub(crate) fn weighted_mean(&self, x: f64) -> Result<f64> {
        let anchor = self.samples.min();
        let compensated = self.compensated();
        let mut weights = Accumulator::new(compensated);
        let mut moments = Accumulator::new(compensated);
        for &xi in self.samples.sorted() {
            let w = self.profile.g(self.scaled_sq(x, xi));
            weights.add(w);
            moments.add(w * (xi - anchor));
        }
        let total = weights.value();
        if total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::DegenerateWeights { at: x });
        }
        let mean = anchor + moments.value() / total;
        Ok(mean.clamp(anchor, self.samples.max()))
    }
}
