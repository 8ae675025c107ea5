//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line; run with
//! `cargo test -p modeseek-core --test acceptance -- --nocapture` to see them.

use std::sync::OnceLock;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use modeseek::diagnostics::{
    self, check_convergence_ratio, check_density_ascent, check_error_ratio_bound,
    check_gradient_at_limit, check_step_inequality, detect_monotone_tail, DiagnosticsConfig,
    Direction, ASCENT_SLACK, INEQUALITY_SLACK,
};
use modeseek::experiment::{run_experiment, ExperimentConfig, OutputPaths, REFERENCE_STARTS};
use modeseek::meanshift::{
    mean_shift_scalar, mode_update, refine_limit, run, FixedPointMap, DEFAULT_MAX_ITERATIONS,
    REFINE_TOLERANCE,
};
use modeseek::modes::{
    cluster_endpoints, default_oracle_window, grid_modes_oracle, oracle_cell, run_from_all,
    DEFAULT_ORACLE_RESOLUTION,
};
use modeseek::{
    DensityModel, IterationConfig, KernelProfile, MixtureSpec, SampleSet, Termination, Trajectory,
};

const SUITE_SEED: u64 = 0x6d6f_6465_7365_656b;
const SUITE_RUNS: usize = 100;
const MODE_BAND: f64 = 0.35;

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:>2}: {name} -- {detail}");
}

struct RandomRun {
    model: DensityModel,
    trajectories: Vec<Trajectory>,
}

/// 100 data sets: n in [2, 200], points uniform on [-10, 10], h in
/// [0.2, 3], Gaussian kernel, one trajectory per sample at the default
/// iteration settings.
fn random_suite() -> &'static [RandomRun] {
    static SUITE: OnceLock<Vec<RandomRun>> = OnceLock::new();
    SUITE.get_or_init(|| {
        let mut rng = StdRng::seed_from_u64(SUITE_SEED);
        (0..SUITE_RUNS)
            .map(|_| {
                let n = rng.random_range(2..=200);
                let points: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..=10.0)).collect();
                let h = rng.random_range(0.2..=3.0);
                let samples = SampleSet::new(points).unwrap();
                let model = DensityModel::new(samples, KernelProfile::gaussian(), h).unwrap();
                let trajectories = run_from_all(
                    model.samples().points(),
                    &model,
                    &IterationConfig::default(),
                )
                .unwrap();
                RandomRun {
                    model,
                    trajectories,
                }
            })
            .collect()
    })
}

struct Replica {
    model: DensityModel,
    trajectories: Vec<Trajectory>,
}

fn replica() -> &'static Replica {
    static REPLICA: OnceLock<Replica> = OnceLock::new();
    REPLICA.get_or_init(|| {
        let samples = MixtureSpec::default().generate().unwrap();
        let model = DensityModel::new(samples, KernelProfile::gaussian(), 1.0).unwrap();
        let trajectories =
            run_from_all(&REFERENCE_STARTS, &model, &IterationConfig::default()).unwrap();
        Replica {
            model,
            trajectories,
        }
    })
}

#[test]
fn criterion_01_reference_replica() {
    let clock = Instant::now();
    let outcome = run_experiment(&ExperimentConfig::reference()).unwrap();
    let elapsed = clock.elapsed();

    let mut failures = Vec::new();
    for t in &outcome.trajectories {
        let target = 3.0f64.copysign(t.start);
        let tail = detect_monotone_tail(t);
        // Each sequence heads straight for its mode: down from above, up from below.
        let want = if t.start > t.final_estimate() {
            Direction::Decreasing
        } else {
            Direction::Increasing
        };
        if t.terminated_by != Termination::Converged {
            failures.push(format!("{}: {:?}", t.start, t.terminated_by));
        }
        if (t.final_estimate() - target).abs() > MODE_BAND {
            failures.push(format!("{}: final {}", t.start, t.final_estimate()));
        }
        if !tail.is_fully_monotone || tail.direction != want {
            failures.push(format!("{}: tail {:?}", t.start, tail));
        }
    }
    // Starts in (-3, 3) must move away from zero to reach their mode, so the
    // sign-based reading (positive means decreasing) cannot hold for them.
    let sign_rule_exceptions: Vec<f64> = outcome
        .trajectories
        .iter()
        .filter(|t| {
            let by_sign = if t.start > 0.0 {
                Direction::Decreasing
            } else {
                Direction::Increasing
            };
            detect_monotone_tail(t).direction != by_sign
        })
        .map(|t| t.start)
        .collect();
    let fast = elapsed.as_secs_f64() < 1.0;
    let ok = failures.is_empty() && fast && outcome.trajectories.len() == 10;
    let finals: Vec<String> = outcome
        .trajectories
        .iter()
        .map(|t| format!("{:.3}", t.final_estimate()))
        .collect();
    report(
        1,
        "reference mixture replica",
        ok,
        &format!(
            "finals [{}], {:.3}s, issues {:?}, starts moving away from zero {:?}",
            finals.join(", "),
            elapsed.as_secs_f64(),
            failures,
            sign_rule_exceptions
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_02_density_ascent() {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (r, run) in random_suite().iter().enumerate() {
        for t in &run.trajectories {
            checked += 1;
            let c = check_density_ascent(t, ASCENT_SLACK).unwrap();
            if !c.holds {
                bad.push((r, t.start, c.first_violation));
            }
        }
    }
    let ok = bad.is_empty();
    report(
        2,
        "density ascent",
        ok,
        &format!("{checked} trajectories, violations {bad:?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_03_step_inequality() {
    let mut records = 0;
    let mut bad = 0;
    let mut bad_squared_form = 0;
    for run in random_suite() {
        let m = &run.model;
        let h = m.bandwidth();
        let phi = diagnostics::phi(m);
        for t in &run.trajectories {
            for r in check_step_inequality(t, m, INEQUALITY_SLACK) {
                records += 1;
                bad += usize::from(!r.holds);
                // The bound exactly as written with a squared bandwidth.
                let dy = t.steps[r.j].y - t.steps[r.j - 1].y;
                let squared = m.profile().norm_const_1d() / (h * h) * dy * dy * phi;
                bad_squared_form += usize::from(r.lhs < squared - INEQUALITY_SLACK);
            }
        }
    }
    let ok = bad == 0 && bad_squared_form == 0;
    report(
        3,
        "step inequality",
        ok,
        &format!("{records} records, violations c/h^3 form {bad}, c/h^2 form {bad_squared_form}"),
    );
    assert!(ok);
}

#[test]
fn criterion_04_monotone_tail() {
    let mut short = 0;
    let mut bad = Vec::new();
    let mut total = 0;
    for (r, run) in random_suite().iter().enumerate() {
        for t in &run.trajectories {
            total += 1;
            let tail = detect_monotone_tail(t);
            // A run that stops after one update has only two estimates.
            let needed = 3.min(t.len());
            short += usize::from(t.len() < 3);
            if tail.tail_len < needed || tail.tail_start > t.len() {
                bad.push((r, t.start, tail.tail_start, t.len()));
            }
        }
    }
    let replica_bad: Vec<f64> = replica()
        .trajectories
        .iter()
        .filter(|t| detect_monotone_tail(t).tail_start != 1)
        .map(|t| t.start)
        .collect();
    let ok = bad.is_empty() && replica_bad.is_empty();
    report(
        4,
        "monotone tail",
        ok,
        &format!(
            "{total} trajectories ({short} with fewer than 3 estimates), short tails {bad:?}, \
             replica not fully monotone {replica_bad:?}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_05_terminal_limits() {
    let config = DiagnosticsConfig::default();
    let mut converged = 0;
    let mut step_bad = 0;
    let mut grad_bad = 0;
    let mut runs_with_grad_bad = 0;
    for run in random_suite() {
        let mut any = false;
        for t in run.trajectories.iter().filter(|t| t.is_converged()) {
            converged += 1;
            step_bad += usize::from(t.final_step().unwrap() >= t.epsilon);
            if !check_gradient_at_limit(t, None, &config).unwrap().holds {
                grad_bad += 1;
                any = true;
            }
        }
        runs_with_grad_bad += usize::from(any);
    }
    let mut replica_bad = 0;
    for t in &replica().trajectories {
        replica_bad += usize::from(!t.is_converged());
        replica_bad += usize::from(t.final_step().unwrap() >= t.epsilon);
        replica_bad += usize::from(!check_gradient_at_limit(t, None, &config).unwrap().holds);
    }
    let ok = step_bad == 0 && grad_bad == 0 && replica_bad == 0;
    report(
        5,
        "terminal limits",
        ok,
        &format!(
            "randomized: {converged} converged, final-step violations {step_bad}, gradient-at-limit \
             violations {grad_bad} (in {runs_with_grad_bad} of {SUITE_RUNS} runs); replica issues {replica_bad}"
        ),
    );
    assert!(ok);
}

struct Agreement {
    stray_pruned: usize,
    missing_oracle: usize,
    worst: f64,
}

fn oracle_agreement(
    model: &DensityModel,
    trajectories: &[Trajectory],
    epsilon: f64,
) -> (Agreement, usize, usize) {
    let (lo, hi) = default_oracle_window(model);
    let oracle = grid_modes_oracle(model, lo, hi, DEFAULT_ORACLE_RESOLUTION).unwrap();
    let pruned = cluster_endpoints(trajectories, model, 2.0 * epsilon).unwrap();
    let tol = (2.0 * epsilon).max(oracle_cell(lo, hi, DEFAULT_ORACLE_RESOLUTION));
    let dist = |x: f64, set: &[f64]| {
        set.iter()
            .map(|m| (m - x).abs())
            .fold(f64::INFINITY, f64::min)
    };

    let mut stray = 0;
    let mut worst: f64 = 0.0;
    for &p in &pruned.modes {
        let d = dist(p, &oracle.modes);
        worst = worst.max(d / tol);
        stray += usize::from(d > tol);
    }
    // Oracle modes that attract a trajectory: nearest oracle mode to an endpoint.
    let mut attracting = vec![false; oracle.len()];
    for t in trajectories
        .iter()
        .filter(|t| t.terminated_by != Termination::DegenerateWeights)
    {
        if let Some(i) = oracle.nearest(t.final_estimate()) {
            attracting[i] = true;
        }
    }
    let missing = oracle
        .modes
        .iter()
        .zip(&attracting)
        .filter(|(m, &a)| a && dist(**m, &pruned.modes) > tol)
        .count();
    (
        Agreement {
            stray_pruned: stray,
            missing_oracle: missing,
            worst,
        },
        pruned.len(),
        oracle.len(),
    )
}

#[test]
fn criterion_06_oracle_equivalence() {
    let epsilon = IterationConfig::default().epsilon;
    let mut bad_runs = Vec::new();
    let mut worst: f64 = 0.0;
    for (r, run) in random_suite().iter().enumerate() {
        let (a, _, _) = oracle_agreement(&run.model, &run.trajectories, epsilon);
        worst = worst.max(a.worst);
        if a.stray_pruned + a.missing_oracle > 0 {
            bad_runs.push(r);
        }
    }

    let rep = replica();
    let (a, pruned, oracle_h1) = oracle_agreement(&rep.model, &rep.trajectories, epsilon);
    let wide = rep.model.with_bandwidth(6.0).unwrap();
    let (lo, hi) = default_oracle_window(&wide);
    let oracle_h6 = grid_modes_oracle(&wide, lo, hi, DEFAULT_ORACLE_RESOLUTION)
        .unwrap()
        .len();
    let replica_ok = a.stray_pruned == 0
        && a.missing_oracle == 0
        && pruned == 2
        && oracle_h1 == 2
        && oracle_h6 == 1;

    let ok = bad_runs.is_empty() && replica_ok;
    report(
        6,
        "oracle equivalence",
        ok,
        &format!(
            "randomized: {} of {SUITE_RUNS} runs disagree (worst distance {worst:.1} x tolerance), runs {bad_runs:?}; \
             replica: pruned {pruned}, oracle {oracle_h1} at h=1 and {oracle_h6} at h=6",
            bad_runs.len()
        ),
    );
    assert!(ok);
}

struct Halving;

impl FixedPointMap for Halving {
    fn apply(&self, y: f64) -> modeseek::Result<f64> {
        Ok(0.5 * y)
    }
    fn derivative(&self, _: f64) -> modeseek::Result<f64> {
        Ok(0.5)
    }
}

#[test]
fn criterion_07_error_ratio() {
    let config = DiagnosticsConfig::default();
    let rep = replica();
    let mut failures = Vec::new();
    let mut checked = 0;
    for t in &rep.trajectories {
        let x_star = refine_limit(
            &rep.model,
            t.final_estimate(),
            REFINE_TOLERANCE,
            DEFAULT_MAX_ITERATIONS,
        )
        .unwrap();
        let r = check_convergence_ratio(&rep.model, t, x_star, &config).unwrap();
        checked += r.checked_pairs;
        if !r.holds {
            failures.push((t.start, r.first_violation));
        }
    }

    let mut ys = vec![1.0];
    for _ in 0..40 {
        ys.push(Halving.apply(*ys.last().unwrap()).unwrap());
    }
    let exact = ys.windows(2).all(|w| w[1] / w[0] == 0.5);
    let linear = check_error_ratio_bound(&Halving, &ys, 0.0, 0.0, &config).unwrap();

    let ok = failures.is_empty() && exact && linear.holds;
    report(
        7,
        "error ratio bound",
        ok,
        &format!(
            "replica: {checked} pairs checked, failures {failures:?}; linear map: ratio exactly 0.5 = {exact}, \
             bound holds = {}",
            linear.holds
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_08_gradient_consistency() {
    let mut rng = StdRng::seed_from_u64(SUITE_SEED ^ 8);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=200);
        let points: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..=10.0)).collect();
        let h = rng.random_range(0.2..=3.0);
        let model = DensityModel::new(
            SampleSet::new(points).unwrap(),
            KernelProfile::gaussian(),
            h,
        )
        .unwrap();
        let x = rng.random_range(-12.0..=12.0);
        let step = 1e-5 * h;
        let fd = (model.density_at(x + step) - model.density_at(x - step)) / (2.0 * step);
        worst = worst.max((model.density_gradient_at(x) - fd).abs());
    }
    let ok = worst <= 1e-5;
    report(
        8,
        "gradient consistency",
        ok,
        &format!("200 points, max |analytic - fd| = {worst:.3e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_09_closed_forms() {
    let gaussian = |pts: &[f64]| {
        DensityModel::new(
            SampleSet::new(pts.to_vec()).unwrap(),
            KernelProfile::gaussian(),
            1.0,
        )
        .unwrap()
    };
    let config = IterationConfig::default();

    let single = gaussian(&[4.25]);
    let t = run(&single, -2.0, &config).unwrap();
    let single_ok = t.steps[1].y == 4.25 && t.is_converged() && t.final_estimate() == 4.25;
    let from_point = run(&single, 4.25, &config).unwrap();
    let single_ok = single_ok && from_point.updates() == 1 && from_point.is_converged();

    let symmetric_ok = [0.5, 1.0, 3.0, 7.5]
        .iter()
        .all(|&a| mean_shift_scalar(&gaussian(&[-a, a]), 0.0).unwrap() == 0.0);

    let closed = 2.0 * (-2.0f64).exp() / (1.0 + (-2.0f64).exp());
    let gauss_step = mean_shift_scalar(&gaussian(&[0.0, 2.0]), 0.0).unwrap();
    let gauss_ok = (gauss_step - closed).abs() <= 1e-12;

    let epan = DensityModel::new(
        SampleSet::new(vec![0.0, 0.5, 3.0]).unwrap(),
        KernelProfile::epanechnikov(),
        1.0,
    )
    .unwrap();
    let epan_ok = mode_update(&epan, 0.2).unwrap() == 0.25;

    let ok = single_ok && symmetric_ok && gauss_ok && epan_ok;
    report(
        9,
        "closed-form examples",
        ok,
        &format!(
            "single point {single_ok}, symmetric {symmetric_ok}, gaussian step |{gauss_step} - {closed}| = {:.1e}, \
             epanechnikov in-window mean {epan_ok}",
            (gauss_step - closed).abs()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_10_determinism() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut config = ExperimentConfig::reference();
        config.outputs = Some(OutputPaths::in_dir(d.path()));
        run_experiment(&config).unwrap();
    }
    let mut same = true;
    for name in ["trajectories.csv", "summary.csv", "diagnostics.json"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        same &= !a.is_empty() && a == b;
    }
    report(
        10,
        "determinism",
        same,
        "two replica runs, three files compared byte for byte",
    );
    assert!(same);
}
