//! Experiment orchestration and the three output files.
//!
//! * `trajectories.csv`: `start,iteration,y,f_hat,f_hat_prime,step`, one row
//!   per recorded estimate; `step` is empty on the last row of a run.
//! * `summary.csv`: one row per start with the iteration count, final
//!   estimate, assigned mode and the estimate at iterations 1, 5, 10, 20,
//!   40, 80 (empty when the run was shorter).
//! * `diagnostics.json`: run parameters, pruned modes, cluster sizes and a
//!   [`TrajectoryDiagnostics`] entry per start.
//!
//! Numbers are written in shortest round-trip form with `.` as decimal
//! separator. Runs execute in parallel but files are assembled in start
//! order, so identical configurations give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{DensityModel, SampleSet};
use crate::diagnostics::{diagnose, DiagnosticsConfig, TrajectoryDiagnostics};
use crate::error::{Error, Result};
use crate::io::{load_samples, MixtureSpec};
use crate::kernel::ProfileRegistry;
use crate::meanshift::{IterationConfig, Trajectory};
use crate::modes::{cluster_endpoints, run_from_all, ModeSet};

/// Iterations at which `summary.csv` samples each trajectory.
pub const SUMMARY_ITERATIONS: [usize; 6] = [1, 5, 10, 20, 40, 80];

/// Starting values used for the reference two-Gaussian run.
pub const REFERENCE_STARTS: [f64; 10] = [
    6.045, -6.575, 0.905, -0.575, 4.457, -4.759, 0.588, -0.602, 5.076, -5.160,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    File(PathBuf),
    Mixture(MixtureSpec),
}

impl DataSource {
    pub fn load(&self) -> Result<SampleSet> {
        match self {
            DataSource::File(path) => load_samples(path),
            DataSource::Mixture(spec) => spec.generate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Starts {
    Values(Vec<f64>),
    AllSamples,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub trajectories: PathBuf,
    pub diagnostics: PathBuf,
    pub summary: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        OutputPaths {
            trajectories: dir.join("trajectories.csv"),
            diagnostics: dir.join("diagnostics.json"),
            summary: dir.join("summary.csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kernel_name: String,
    pub bandwidth: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub data_source: DataSource,
    pub starts: Starts,
    pub outputs: Option<OutputPaths>,
    pub diagnostics: DiagnosticsConfig,
}

impl ExperimentConfig {
    /// Gaussian kernel, `h = 1`, `epsilon = 0.0005`, the reference mixture and
    /// the ten reference starts.
    pub fn reference() -> Self {
        ExperimentConfig {
            kernel_name: "gaussian".into(),
            bandwidth: 1.0,
            epsilon: crate::meanshift::DEFAULT_EPSILON,
            max_iterations: crate::meanshift::DEFAULT_MAX_ITERATIONS,
            data_source: DataSource::Mixture(MixtureSpec::default()),
            starts: Starts::Values(REFERENCE_STARTS.to_vec()),
            outputs: None,
            diagnostics: DiagnosticsConfig::default(),
        }
    }

    pub fn iteration(&self) -> Result<IterationConfig> {
        IterationConfig::new(self.epsilon, self.max_iterations)
    }

    pub fn validate(&self) -> Result<()> {
        self.iteration()?;
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        if let Starts::Values(v) = &self.starts {
            if v.is_empty() {
                return Err(Error::InvalidConfig(
                    "at least one start is required".into(),
                ));
            }
            if let Some(bad) = v.iter().find(|s| !s.is_finite()) {
                return Err(Error::InvalidConfig(format!("start {bad} is not finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub start: f64,
    pub terminated_by: &'static str,
    pub iterations: usize,
    pub final_estimate: f64,
    pub assigned_mode: Option<usize>,
    pub assigned_location: Option<f64>,
    /// Estimates at [`SUMMARY_ITERATIONS`].
    pub sampled: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub samples: SampleSet,
    pub trajectories: Vec<Trajectory>,
    pub diagnostics: Vec<TrajectoryDiagnostics>,
    pub modes: ModeSet,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutcome {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.modes.cluster_sizes()
    }
}

/// Runs every start, diagnoses each trajectory, clusters the endpoints and,
/// when `config.outputs` is set, writes the three output files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment_with(config, &ProfileRegistry::with_builtins())
}

pub fn run_experiment_with(
    config: &ExperimentConfig,
    registry: &ProfileRegistry,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    let iteration = config.iteration()?;
    let profile = registry.get(&config.kernel_name)?;
    if !profile.guarantees_monotone_convergence() {
        log::warn!(
            "kernel `{}` lacks a strictly decreasing g; monotone convergence is not guaranteed",
            profile.name()
        );
    }
    let samples = config.data_source.load()?;
    let model = DensityModel::new(samples.clone(), profile, config.bandwidth)?;

    let starts: Vec<f64> = match &config.starts {
        Starts::Values(v) => v.clone(),
        Starts::AllSamples => samples.points().to_vec(),
    };
    let trajectories = run_from_all(&starts, &model, &iteration)?;
    let diagnostics: Vec<TrajectoryDiagnostics> = trajectories
        .par_iter()
        .map(|t| diagnose(&model, t, &config.diagnostics))
        .collect();
    let modes = cluster_endpoints(&trajectories, &model, 2.0 * iteration.epsilon)?;

    let summary = trajectories
        .iter()
        .zip(&modes.assignments)
        .map(|(t, assigned)| SummaryRow {
            start: t.start,
            terminated_by: t.terminated_by.as_str(),
            iterations: t.updates(),
            final_estimate: t.final_estimate(),
            assigned_mode: *assigned,
            assigned_location: assigned.map(|i| modes.modes[i]),
            sampled: SUMMARY_ITERATIONS
                .iter()
                .map(|&j| t.estimate_at(j))
                .collect(),
        })
        .collect();

    let outcome = ExperimentOutcome {
        samples,
        trajectories,
        diagnostics,
        modes,
        summary,
    };
    if let Some(paths) = &config.outputs {
        write_outputs(paths, config, &outcome)?;
    }
    Ok(outcome)
}

fn write_outputs(
    paths: &OutputPaths,
    config: &ExperimentConfig,
    outcome: &ExperimentOutcome,
) -> Result<()> {
    let write = |path: &Path, body: String| {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, body).map_err(|e| Error::io(path, e))
    };
    write(&paths.trajectories, trajectories_csv(&outcome.trajectories))?;
    write(&paths.summary, summary_csv(&outcome.summary))?;
    write(&paths.diagnostics, diagnostics_json(config, outcome)?)?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn trajectories_csv(trajectories: &[Trajectory]) -> String {
    let mut out = String::from("start,iteration,y,f_hat,f_hat_prime,step\n");
    for t in trajectories {
        for (i, s) in t.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                t.start,
                i + 1,
                s.y,
                s.f_hat,
                s.f_hat_prime,
                opt(s.step)
            );
        }
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "start,terminated_by,iterations,final_estimate,assigned_mode,assigned_location",
    );
    for j in SUMMARY_ITERATIONS {
        let _ = write!(out, ",y_{j}");
    }
    out.push_str(",y_final\n");
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            r.start,
            r.terminated_by,
            r.iterations,
            r.final_estimate,
            r.assigned_mode.map(|i| i.to_string()).unwrap_or_default(),
            opt(r.assigned_location)
        );
        for v in &r.sampled {
            let _ = write!(out, ",{}", opt(*v));
        }
        let _ = writeln!(out, ",{}", r.final_estimate);
    }
    out
}

#[derive(Serialize)]
struct DiagnosticsFile<'a> {
    kernel: &'a str,
    bandwidth: f64,
    epsilon: f64,
    max_iterations: usize,
    n_samples: usize,
    data_source: &'a DataSource,
    settings: &'a DiagnosticsConfig,
    modes: &'a [f64],
    mode_densities: &'a [f64],
    cluster_sizes: Vec<usize>,
    trajectories: &'a [TrajectoryDiagnostics],
}

pub fn diagnostics_json(config: &ExperimentConfig, outcome: &ExperimentOutcome) -> Result<String> {
    let file = DiagnosticsFile {
        kernel: &config.kernel_name,
        bandwidth: config.bandwidth,
        epsilon: config.epsilon,
        max_iterations: config.max_iterations,
        n_samples: outcome.samples.len(),
        data_source: &config.data_source,
        settings: &config.diagnostics,
        modes: &outcome.modes.modes,
        mode_densities: &outcome.modes.densities,
        cluster_sizes: outcome.cluster_sizes(),
        trajectories: &outcome.diagnostics,
    };
    let mut body = serde_json::to_string_pretty(&file)?;
    body.push('\n');
    Ok(body)
}
