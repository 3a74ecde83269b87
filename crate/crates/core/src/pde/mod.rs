//! Phase-space discretization of the kinetic Fokker-Planck dynamics:
//! generator assembly, steady state, and forward/backward evolution.

mod assemble;
mod evolve;
mod steady;

pub use assemble::{assemble_generator, DiscreteGenerator, GeneratorMetadata, Scheme};
pub use evolve::{
    evolve_density, evolve_observable, CnStepper, DensityEvolution, ObservableEvolution,
};
pub use steady::{steady_state, SteadyState, BOUNDARY_MASS_LIMIT};

use crate::model::ModelSpec;

/// Certificate-informed default half-widths: at least 6 equilibrium standard
/// deviations sigma/sqrt(gamma) per coordinate, scaled by 1.5 for perturbed
/// models.
pub fn default_halfwidth(model: &ModelSpec) -> f64 {
    let gamma = model.gamma().unwrap_or(1.0);
    let std = model.sigma / gamma.sqrt();
    let factor = match model.perturbation() {
        Some(p) if !p.is_none() => 1.5,
        _ => 1.0,
    };
    6.0 * std * factor
}
