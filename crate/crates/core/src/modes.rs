//! Mode location: a brute-force grid oracle, pruning of mean shift endpoints
//! and assignment of samples to the pruned modes.

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{DensityModel, SampleSet};
use crate::diagnostics::{classify_fixed_point, StabilityClass, MARGINAL_BAND};
use crate::error::{Error, Result};
use crate::meanshift::{run, IterationConfig, Termination, Trajectory};

pub const DEFAULT_ORACLE_RESOLUTION: usize = 4097;
/// Margin of the default oracle window, in bandwidths.
pub const ORACLE_MARGIN_BANDWIDTHS: f64 = 3.0;
pub const BISECTION_STEPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSet {
    /// Strictly increasing mode locations.
    pub modes: Vec<f64>,
    pub densities: Vec<f64>,
    /// Per-sample mode index; `None` when the sample's run degenerated.
    /// Empty for sets that did not come from a clustering run.
    pub assignments: Vec<Option<usize>>,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Index of the mode closest to `x`; ties go to the lower index.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        self.modes
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .map(|(i, _)| i)
    }

    /// Number of samples assigned to each mode.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.modes.len()];
        for i in self.assignments.iter().flatten() {
            sizes[*i] += 1;
        }
        sizes
    }
}

/// `[min - 3h, max + 3h]`.
pub fn default_oracle_window(model: &DensityModel) -> (f64, f64) {
    let margin = ORACLE_MARGIN_BANDWIDTHS * model.bandwidth();
    (
        model.samples().min() - margin,
        model.samples().max() + margin,
    )
}

/// Width of one oracle grid cell as used for agreement tolerances.
pub fn oracle_cell(lo: f64, hi: f64, resolution: usize) -> f64 {
    (hi - lo) / resolution as f64
}

/// Locates local maxima of the density without touching the mean shift map.
///
/// The analytic derivative is sampled on `resolution` evenly spaced points
/// of `[lo, hi]`; every cell where it goes from positive to non-positive is
/// bisected [`BISECTION_STEPS`] times. Flat stretches of the density (zero
/// derivative across several grid points) are reported once, at their left
/// edge.
pub fn grid_modes_oracle(
    model: &DensityModel,
    lo: f64,
    hi: f64,
    resolution: usize,
) -> Result<ModeSet> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidConfig(format!(
            "oracle window [{lo}, {hi}] is empty"
        )));
    }
    if resolution < 3 {
        return Err(Error::InvalidConfig(
            "oracle resolution must be at least 3".into(),
        ));
    }
    let spacing = (hi - lo) / (resolution - 1) as f64;
    let grid: Vec<f64> = (0..resolution).map(|i| lo + spacing * i as f64).collect();
    let slope: Vec<f64> = grid
        .par_iter()
        .map(|&x| model.density_gradient_at(x))
        .collect();

    let mut modes = Vec::new();
    for i in 0..resolution - 1 {
        if slope[i] > 0.0 && slope[i + 1] <= 0.0 {
            let (mut a, mut b) = (grid[i], grid[i + 1]);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (a + b);
                if model.density_gradient_at(mid) > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            modes.push(0.5 * (a + b));
        }
    }
    let densities = modes.iter().map(|&m| model.density_at(m)).collect();
    Ok(ModeSet {
        modes,
        densities,
        assignments: Vec::new(),
    })
}

/// Merges nearby endpoints and drops repelling ones.
///
/// Estimates are sorted; maximal runs whose consecutive gaps are at most
/// `merge_radius` collapse to the member with the highest density. A
/// representative whose `|m'|` is classified repelling is discarded; one
/// that cannot be classified (degenerate weights) is kept.
pub fn prune_modes(estimates: &[f64], model: &DensityModel, merge_radius: f64) -> Result<ModeSet> {
    prune_modes_with_band(estimates, model, merge_radius, MARGINAL_BAND)
}

pub fn prune_modes_with_band(
    estimates: &[f64],
    model: &DensityModel,
    merge_radius: f64,
    tau: f64,
) -> Result<ModeSet> {
    if estimates.is_empty() {
        return Err(Error::EmptyEstimates);
    }
    if !(merge_radius.is_finite() && merge_radius > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "merge radius must be positive, got {merge_radius}"
        )));
    }
    if let Some(&bad) = estimates.iter().find(|e| !e.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "mode estimate {bad} is not finite"
        )));
    }
    let mut sorted = estimates.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut modes = Vec::new();
    let mut densities = Vec::new();
    let mut group_start = 0;
    for end in 1..=sorted.len() {
        if end < sorted.len() && sorted[end] - sorted[end - 1] <= merge_radius {
            continue;
        }
        let (rep, density) = sorted[group_start..end]
            .iter()
            .map(|&x| (x, model.density_at(x)))
            .fold((f64::NAN, f64::NEG_INFINITY), |best, cand| {
                if cand.1 > best.1 {
                    cand
                } else {
                    best
                }
            });
        group_start = end;
        let repelling = matches!(
            classify_fixed_point(model, rep, tau),
            Ok(r) if r.stability_class == StabilityClass::Repelling
        );
        if !repelling {
            modes.push(rep);
            densities.push(density);
        }
    }
    Ok(ModeSet {
        modes,
        densities,
        assignments: Vec::new(),
    })
}

/// Prunes the endpoints of `trajectories` and assigns each trajectory the
/// pruned mode nearest its endpoint. Degenerate runs stay unassigned.
pub fn cluster_endpoints(
    trajectories: &[Trajectory],
    model: &DensityModel,
    merge_radius: f64,
) -> Result<ModeSet> {
    let usable = |t: &&Trajectory| t.terminated_by != Termination::DegenerateWeights;
    let endpoints: Vec<f64> = trajectories
        .iter()
        .filter(usable)
        .map(Trajectory::final_estimate)
        .collect();
    let mut set = if endpoints.is_empty() {
        ModeSet {
            modes: Vec::new(),
            densities: Vec::new(),
            assignments: Vec::new(),
        }
    } else {
        prune_modes(&endpoints, model, merge_radius)?
    };
    set.assignments = trajectories
        .iter()
        .map(|t| {
            if t.terminated_by == Termination::DegenerateWeights {
                None
            } else {
                set.nearest(t.final_estimate())
            }
        })
        .collect();
    Ok(set)
}

/// Runs mean shift from every sample and clusters the samples by the mode
/// their trajectory reaches. Merge radius is `2 epsilon`.
pub fn assign_clusters(
    samples: &SampleSet,
    model: &DensityModel,
    config: &IterationConfig,
) -> Result<ModeSet> {
    let trajectories = run_from_all(samples.points(), model, config)?;
    cluster_endpoints(&trajectories, model, 2.0 * config.epsilon)
}

/// One trajectory per start, in start order. Runs are independent and
/// executed in parallel.
pub fn run_from_all(
    starts: &[f64],
    model: &DensityModel,
    config: &IterationConfig,
) -> Result<Vec<Trajectory>> {
    starts.par_iter().map(|&s| run(model, s, config)).collect()
}
