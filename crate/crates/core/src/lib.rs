//! Numerical laboratory for transport cost between Lebesgue measure and
//! stationary point processes on the line.
//!
//! The crate is organised around five subsystems:
//!
//! * [`samplers`] — unit-intensity point-process samplers (Poisson, perturbed
//!   lattice, stationary renewal, sine-kernel determinantal, circular
//!   beta-ensemble), all driven by counter-based seeds.
//! * [`transport`] — exact optimal semicouplings and couplings between
//!   discretized Lebesgue supply and point configurations under the concave
//!   cost `|x - y|^p`, `0 < p <= 1`, plus boundary/structure diagnostics.
//! * [`dyadic`] — the recursive block-doubling coupling construction with its
//!   per-level cost ledger and summability checks.
//! * [`estimators`] — Monte Carlo curves (number variance, absolute deviation,
//!   per-length transport cost), growth-law fits and the critical-exponent
//!   estimate `p*`.
//! * [`torus`] — balanced allocations on a finite torus and the shift-coupling
//!   inequality check.

pub mod dyadic;
pub mod error;
pub mod estimators;
pub mod models;
pub mod samplers;
pub mod seed;
pub mod stats;
pub mod torus;
pub mod transport;
pub mod window;

pub use error::LabError;
pub use models::{InterarrivalLaw, ProcessModel};
pub use seed::SeedPair;
pub use window::{PointConfiguration, Topology, WindowSpec};

/// Crate result type.
pub type Result<T> = std::result::Result<T, LabError>;
