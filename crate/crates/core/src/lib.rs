//! Numerical certification toolkit for kinetic Langevin dynamics with
//! non-explicit steady states.
//!
//! The dynamics is dX = V dt, dV = b(X, V) dt + sqrt(2) sigma dW with
//! generator L = v.grad_x + b.grad_v + sigma^2 laplace_v. The crate
//! quantitatively checks the ingredients of its L^2 convergence theory:
//!
//! * [`certify`] — contraction certificates (A, kappa, R, eps) for the
//!   one-sided drift condition, via a Lyapunov solve, plus a seeded
//!   falsifier;
//! * [`pde`] — a d = 1 phase-space discretization computing the steady
//!   state, forward densities and backward observables;
//! * [`hypo`] — the time-weighted modified norm, its dissipation matrix
//!   R_t, the certified decay rate, the min(t, t^3) envelope, and both
//!   Poincaré-constant routes (Rayleigh quotient and semigroup
//!   contraction);
//! * [`mc`] — SDE integrators, synchronous-coupling growth/contraction
//!   verdicts, and ergodic moment cross-checks.

pub mod certify;
pub mod error;
pub mod grid;
pub mod hypo;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod pde;

pub use error::{Error, Result};
pub use grid::{GridField, PhaseGrid};
pub use model::{DriftFamily, ModelSpec, Perturbation, PhasePoint, Potential};
