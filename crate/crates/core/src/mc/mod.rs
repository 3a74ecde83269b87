//! Stochastic simulation of the kinetic Langevin SDE: trajectory
//! integration, synchronous-coupling diagnostics, and ergodic moments.

mod coupling;
mod integrate;
mod moments;

pub use coupling::{couple_synchronous, CouplingReport, CouplingStats};
pub use integrate::{
    integrate, linear_flow, Integrator, LinearFlow, SdeRunConfig, TrajectoryOutput,
    TrajectorySim, DIVERGENCE_LIMIT,
};
pub use moments::{ergodic_moments, MomentEstimate, MomentsReport};
