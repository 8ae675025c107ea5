//! Kernel profiles.
//!
//! A radially symmetric kernel is written `K(x) = c * k(x^2)` where `k` is the
//! profile. The mean shift update only ever sees `g = -k'`, the negated
//! derivative of the profile, while density values also need the
//! one-dimensional normalization constant `c`.
//!
//! Two profiles are built in:
//!
//! * `gaussian`: `k(x) = exp(-x/2)`, `g(x) = exp(-x/2)/2`, `c = 1/sqrt(2 pi)`.
//! * `epanechnikov`: `k(x) = 1 - x` on `[0, 1]` and `0` beyond, `g(x) = 1` on
//!   `[0, 1)` and `0` from `1` on, `c = 3/4`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Scalar function of a nonnegative squared distance.
pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Gaussian,
    Epanechnikov,
    Custom { k: ProfileFn, g: ProfileFn },
}

/// A kernel profile `k`, its negated derivative `g`, and the capability flags
/// that decide whether the monotone-convergence guarantee applies.
#[derive(Clone)]
pub struct KernelProfile {
    name: String,
    shape: Shape,
    norm_const_1d: f64,
    strictly_decreasing_g: bool,
    convex_profile: bool,
}

impl fmt::Debug for KernelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelProfile")
            .field("name", &self.name)
            .field("norm_const_1d", &self.norm_const_1d)
            .field("strictly_decreasing_g", &self.strictly_decreasing_g)
            .field("convex_profile", &self.convex_profile)
            .finish_non_exhaustive()
    }
}

/// Capability flags a user-supplied profile must declare up front.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileFlags {
    pub strictly_decreasing_g: bool,
    pub convex_profile: bool,
}

impl KernelProfile {
    pub fn gaussian() -> Self {
        KernelProfile {
            name: "gaussian".to_owned(),
            shape: Shape::Gaussian,
            norm_const_1d: 1.0 / (2.0 * std::f64::consts::PI).sqrt(),
            strictly_decreasing_g: true,
            convex_profile: true,
        }
    }

    pub fn epanechnikov() -> Self {
        KernelProfile {
            name: "epanechnikov".to_owned(),
            shape: Shape::Epanechnikov,
            norm_const_1d: 0.75,
            strictly_decreasing_g: false,
            convex_profile: true,
        }
    }

    /// Builds a profile from closures. Nothing about `k` or `g` is inferred:
    /// the caller vouches for `flags` and for `g = -k'`.
    pub fn custom(
        name: impl Into<String>,
        k: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        norm_const_1d: f64,
        flags: ProfileFlags,
    ) -> Result<Self> {
        if !(norm_const_1d.is_finite() && norm_const_1d > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "normalization constant must be positive and finite, got {norm_const_1d}"
            )));
        }
        Ok(KernelProfile {
            name: name.into(),
            shape: Shape::Custom {
                k: Arc::new(k),
                g: Arc::new(g),
            },
            norm_const_1d,
            strictly_decreasing_g: flags.strictly_decreasing_g,
            convex_profile: flags.convex_profile,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `c` such that `c * integral of k(x^2) dx = 1` over the real line.
    pub fn norm_const_1d(&self) -> f64 {
        self.norm_const_1d
    }

    pub fn strictly_decreasing_g(&self) -> bool {
        self.strictly_decreasing_g
    }

    pub fn convex_profile(&self) -> bool {
        self.convex_profile
    }

    /// Convex `k` and strictly decreasing `g`, which together make every
    /// trajectory converge monotonically.
    pub fn guarantees_monotone_convergence(&self) -> bool {
        self.convex_profile && self.strictly_decreasing_g
    }

    /// Evaluates the profile `k(x)`.
    pub fn profile_eval(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.k(x))
    }

    /// Evaluates `g(x) = -k'(x)`.
    pub fn g_eval(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.g(x))
    }

    // Unchecked variants for the hot loops, where the argument is a square.
    #[inline]
    pub(crate) fn k(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian => (-0.5 * x).exp(),
            Shape::Epanechnikov => {
                if x <= 1.0 {
                    1.0 - x
                } else {
                    0.0
                }
            }
            Shape::Custom { k, .. } => k(x),
        }
    }

    #[inline]
    pub(crate) fn g(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian => 0.5 * (-0.5 * x).exp(),
            // g(1) = 0: the kink is assigned to the "outside" branch.
            Shape::Epanechnikov => {
                if x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Custom { g, .. } => g(x),
        }
    }
}

fn check_domain(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(x))
    }
}

/// Name-keyed collection of profiles, used by the CLI to resolve `--kernel`.
#[derive(Debug, Clone)]
pub struct ProfileRegistry {
    profiles: BTreeMap<String, KernelProfile>,
}

impl Default for ProfileRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl ProfileRegistry {
    pub fn empty() -> Self {
        ProfileRegistry {
            profiles: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register(KernelProfile::gaussian());
        registry.register(KernelProfile::epanechnikov());
        registry
    }

    /// Adds or replaces a profile under its own name.
    pub fn register(&mut self, profile: KernelProfile) {
        self.profiles.insert(profile.name.clone(), profile);
    }

    pub fn get(&self, name: &str) -> Result<KernelProfile> {
        self.profiles
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownKernel(name.to_owned()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }
}
