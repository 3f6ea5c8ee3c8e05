//! Unit-intensity stationary point-process samplers.
//!
//! Every sampler is a pure function of `(model, window, seed pair)`:
//! identical inputs give bit-identical configurations, and replicas use
//! counter-based seed derivation so results do not depend on scheduling.

pub mod circular_beta;
pub mod lattice;
pub mod poisson;
pub mod renewal;
pub mod sine_dpp;

mod tridiag;

pub use circular_beta::{sample_circular_beta, CircularBetaSampler};
pub use lattice::sample_perturbed_lattice;
pub use poisson::sample_poisson;
pub use renewal::{sample_heavy_tail_renewal, sample_renewal};
pub use sine_dpp::{sample_sine_dpp, SineDppSampler};

use crate::error::LabError;
use crate::models::ProcessModel;
use crate::seed::SeedPair;
use crate::window::{PointConfiguration, Topology, WindowSpec};

/// Samples one realization of `model` on `window`.
///
/// Samplers are exact in exactly one topology: the sine-kernel process only
/// on intervals, the circular beta-ensemble only on tori (with integer
/// circumference). The remaining models accept both.
pub fn sample(
    model: &ProcessModel,
    window: &WindowSpec,
    seed: SeedPair,
) -> Result<PointConfiguration, LabError> {
    model.validate()?;
    if let Some(required) = model.required_topology() {
        if window.topology != required {
            return Err(LabError::InvalidArgument(format!(
                "model {model} requires {required:?} topology, window is {:?}",
                window.topology
            )));
        }
    }
    match model {
        ProcessModel::Poisson => sample_poisson(window, seed),
        ProcessModel::PerturbedLattice { sigma } => {
            sample_perturbed_lattice(window, *sigma, seed)
        }
        ProcessModel::Renewal { law } => sample_renewal(window, *law, seed),
        ProcessModel::HeavyTailRenewal { alpha } => {
            sample_heavy_tail_renewal(window, *alpha, seed)
        }
        ProcessModel::SineKernelDpp { m } => sample_sine_dpp(window, *m, seed),
        ProcessModel::CircularBeta { beta } => {
            let n = window.n;
            if (n - n.round()).abs() > 1e-9 || n < 2.0 {
                return Err(LabError::InvalidArgument(format!(
                    "circular beta-ensemble needs an integer torus circumference >= 2, got {n}"
                )));
            }
            sample_circular_beta(n.round() as usize, *beta, seed)
        }
    }
}

/// Convenience check used by samplers that only support one topology.
pub(crate) fn expect_topology(
    window: &WindowSpec,
    t: Topology,
    what: &str,
) -> Result<(), LabError> {
    if window.topology != t {
        return Err(LabError::InvalidArgument(format!(
            "{what} requires {t:?} topology"
        )));
    }
    Ok(())
}
