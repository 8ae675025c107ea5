//! One-dimensional mean shift mode seeking.
//!
//! [`density`] evaluates a kernel density estimate and its derivative,
//! [`meanshift`] iterates the fixed-point update towards a mode,
//! [`diagnostics`] checks the recorded trajectory for the convergence
//! properties the iteration is known to have, and [`modes`] turns endpoints
//! into a pruned set of modes and a clustering. [`experiment`] ties these
//! together behind the `modeseek` command-line tool.

pub mod density;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod io;
pub mod kernel;
pub mod meanshift;
pub mod modes;

pub use density::{DensityModel, SampleSet};
pub use diagnostics::{
    DiagnosticsConfig, Direction, FixedPointReport, MonotoneTailReport, StabilityClass,
    StepInequalityRecord,
};
pub use error::{Error, Result};
pub use experiment::{DataSource, ExperimentConfig, OutputPaths, Starts};
pub use io::MixtureSpec;
pub use kernel::{KernelProfile, ProfileFlags, ProfileRegistry};
pub use meanshift::{FixedPointMap, IterationConfig, Step, Termination, Trajectory};
pub use modes::ModeSet;
