//! Supremum-based outer measures on finite state spaces.
//!
//! Uncertainty about a random variable is represented by a finite mixture
//! `M = Σᵢ aᵢ·δ_{fᵢ}` of non-negative bounded functions. The induced set
//! function `A ↦ Σᵢ aᵢ·sup_A fᵢ` is an outer measure that upper-bounds every
//! probability measure consistent with the available information.
//!
//! The crate is organised bottom-up:
//!
//! - [`funcspace`]: state spaces, bounded functions, subset masks and the
//!   pointwise / supremum algebra on them.
//! - [`constraint`]: mixtures of bounded functions, their outer measures,
//!   canonical form and the usual constructors (indicator, possibility,
//!   partition, probability, mass function).
//! - [`transport`]: pushforward, pullback and marginalisation along point maps.
//! - [`fusion`]: the normalised fusion of independent constraints, Dempster's
//!   rule as an independent reference, and fusion over a general `(ℓ, θ)`
//!   kernel.
//! - [`assimilation`]: a scalar Kalman-style update against Gaussian-shaped
//!   upper bounds and a scenario runner for finite-resolution sensors.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use possfuse_core::prelude::*;
//!
//! let space = StateSpace::from_labels(["a", "b", "c"]).unwrap();
//! let ab = SubsetMask::from_labels(&space, ["a", "b"]).unwrap();
//! let bc = SubsetMask::from_labels(&space, ["b", "c"]).unwrap();
//!
//! let p = Constraint::from_indicator(&ab);
//! let q = Constraint::from_indicator(&bc);
//! let (fused, diag) = fuse(&p, &q).unwrap();
//!
//! let b = SubsetMask::from_labels(&space, ["b"]).unwrap();
//! assert_eq!(fused.outer_measure(&b).unwrap(), 1.0);
//! assert_eq!(diag.normalizer, 1.0);
//! ```

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assimilation;
pub mod constraint;
mod error;
pub mod funcspace;
pub mod fusion;
pub mod transport;

pub use error::{Error, Result};

/// Absolute tolerance used for float comparisons unless overridden.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Mixture components whose weight falls below this value are dropped after
/// canonicalisation and fusion.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Numerical thresholds shared by the comparison and normalisation routines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    /// Absolute tolerance for equality tests and "is zero" decisions.
    pub abs: f64,
    /// Weight under which a mixture component is discarded.
    pub prune: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: DEFAULT_TOLERANCE,
            prune: PRUNE_THRESHOLD,
        }
    }
}

impl Tolerance {
    pub fn with_abs(abs: f64) -> Self {
        Self { abs, ..Self::default() }
    }
}

pub mod prelude {
    pub use crate::assimilation::{
        assimilate, assimilate_on_grid, quadrature_weight, run_scenario, AssimilationResult, GaussBound, GaussPrior,
        Observations, ScenarioConfig, SensorMode, StepRecord,
    };
    pub use crate::constraint::{
        AxiomReport, Component, Constraint, DiscreteProbability, MassFunction, SampledDomination,
    };
    pub use crate::funcspace::{BoundFn, GaussShape, Grid, StateSpace, SubsetMask};
    pub use crate::fusion::{
        check_kernel_associativity, dempster_combine, fuse, fuse_with, general_fuse, odot, FusionDiagnostics,
        FusionKernel, KernelCheck,
    };
    pub use crate::transport::{marginalize, pullback, pushforward, Factor, PointMap};
    pub use crate::{Error, Result, Tolerance};
}
