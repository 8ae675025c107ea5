//! `modeseek`: run mean shift on a 1-D sample and write trajectories,
//! a per-start summary and a diagnostics report.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use modeseek::experiment::{run_experiment, REFERENCE_STARTS};
use modeseek::io::{write_samples, REFERENCE_SEED};
use modeseek::meanshift::{DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS};
use modeseek::{
    DataSource, DiagnosticsConfig, ExperimentConfig, MixtureSpec, OutputPaths, ProfileRegistry,
    Starts,
};

#[derive(Parser)]
#[command(
    name = "modeseek",
    version,
    about = "One-dimensional mean shift with convergence diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run mean shift from a set of starts and write the result files.
    Run(RunArgs),
    /// Write a seeded two-component normal mixture, one value per line.
    Generate {
        #[command(flatten)]
        mixture: MixtureArgs,
        /// Destination file.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// List the available kernel profiles.
    Kernels,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    bandwidth: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    /// Sample file, one decimal per line. Without it the mixture is generated.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    mixture: MixtureArgs,
    /// Comma-separated starting points, or `all` to start from every sample.
    /// Defaults to the ten reference starts.
    #[arg(long, allow_hyphen_values = true)]
    starts: Option<String>,
    /// Directory for trajectories.csv, summary.csv and diagnostics.json.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct MixtureArgs {
    #[arg(long, default_value_t = REFERENCE_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    n_pos: usize,
    #[arg(long, default_value_t = 500)]
    n_neg: usize,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    mu_pos: f64,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    mu_neg: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

impl MixtureArgs {
    fn spec(&self) -> MixtureSpec {
        MixtureSpec {
            seed: self.seed,
            n_pos: self.n_pos,
            n_neg: self.n_neg,
            mu_pos: self.mu_pos,
            mu_neg: self.mu_neg,
            sigma: self.sigma,
        }
    }
}

fn parse_starts(raw: Option<&str>) -> anyhow::Result<Starts> {
    let Some(raw) = raw else {
        return Ok(Starts::Values(REFERENCE_STARTS.to_vec()));
    };
    if raw.trim().eq_ignore_ascii_case("all") {
        return Ok(Starts::AllSamples);
    }
    let values = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid start `{}`", s.trim()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if values.is_empty() {
        bail!("no starts given");
    }
    Ok(Starts::Values(values))
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let data_source = match args.data {
        Some(path) => DataSource::File(path),
        None => DataSource::Mixture(args.mixture.spec()),
    };
    let config = ExperimentConfig {
        kernel_name: args.kernel,
        bandwidth: args.bandwidth,
        epsilon: args.epsilon,
        max_iterations: args.max_iterations,
        data_source,
        starts: parse_starts(args.starts.as_deref())?,
        outputs: Some(OutputPaths::in_dir(&args.out_dir)),
        diagnostics: DiagnosticsConfig::default(),
    };
    let outcome = run_experiment(&config)?;

    let converged = outcome
        .trajectories
        .iter()
        .filter(|t| t.is_converged())
        .count();
    info!(
        "{} samples, {} starts, {} converged",
        outcome.samples.len(),
        outcome.trajectories.len(),
        converged
    );
    println!("modes: {}", outcome.modes.modes.len());
    for (i, (m, size)) in outcome
        .modes
        .modes
        .iter()
        .zip(outcome.cluster_sizes())
        .enumerate()
    {
        println!(
            "  mode {i}: x = {m:.6}, f = {:.6}, starts = {size}",
            outcome.modes.densities[i]
        );
    }
    println!("wrote {}", args.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Generate { mixture, out } => mixture
            .spec()
            .generate()
            .and_then(|s| write_samples(&out, &s))
            .map_err(Into::into),
        Command::Kernels => {
            for name in ProfileRegistry::with_builtins().names() {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
