//! Simulation and analysis of the one-dimensional SDE `dZ = σ(Z₋) dX`
//! driven by a symmetric α-stable process with `α ∈ (0, 1)`.
//!
//! Weak solutions are built by the time change `Z = X ∘ φ`, where `φ` is the
//! right-continuous inverse of `I_t = ∫_0^t σ(X_s)^{−α} ds`. The crate
//! evaluates the potential-kernel integral tests and Wiener-type capacity
//! series that decide when `I` is finite, classifies existence and
//! uniqueness from the irregular set `O(σ, α)` and the zero set `N(σ)`, and
//! cross-checks those verdicts against Monte Carlo path experiments.

// `!(a < b)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod ext;
pub mod function;
pub mod functionals;
pub mod interval;
pub mod numeric;
pub mod rng;
pub mod sde;
pub mod stable;
pub mod stats;
pub mod wiener;

pub use error::{Error, ErrorClass, Result};
pub use function::{Form, FunctionSpec, Locus, Mark, Piece};
pub use interval::{IntervalSet, PointSet};
pub use stable::{GridKind, GridSpec, KillingSpec, PathSample, Refinement, StableParams};
