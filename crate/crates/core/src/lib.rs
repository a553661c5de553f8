//! Adaptive extra-gradient optimization over compact convex sets.
//!
//! The crate is organized around a small number of pieces:
//!
//! - [`geometry`]: Bregman geometries (distance-generating functions),
//!   feasible sets, generalized prox steps and diameters.
//! - [`oracles`]: objective definitions with exact and stochastic
//!   first-order oracles, certified problem constants and reference
//!   solutions.
//! - [`solver`]: the two-prox-per-iteration template and the UniXGrad
//!   instantiation with weighted averaging and the adaptive step size.
//! - [`baselines`]: projected SGD, scalar-step AdaGrad and AMSGrad for
//!   comparison runs.
//! - [`data`]: LIBSVM parsing, train/test splitting and synthetic problem
//!   generators.
//! - [`diagnostics`]: rate fitting, convergence-bound checks and accuracy
//!   measurement over completed run traces.

pub mod baselines;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod oracles;
pub mod solver;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub use baselines::{BaselineConfig, BaselineKind};
pub use geometry::{BregmanGeometry, Diameter, FeasibleSet};
pub use oracles::{ObjectiveKind, OracleMode, Problem, Reference};
pub use solver::{IterationRecord, RunTrace, SolverConfig, SolverVariant};
