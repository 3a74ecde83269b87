//! Modified-norm decay machinery and Poincaré-constant estimation.

mod decay;
mod poincare;
mod schedule;

pub use decay::{
    check_integral_envelope_bound, envelope_check, verify_decay, DecayReport, EnvelopeReport,
    ModifiedNormTrace,
};
pub use poincare::{
    operator_norm_pt, poincare_prop2, poincare_rayleigh, velocity_only_quotient, OpnormEstimate,
    PoincareEstimate, RayleighResult,
};
pub use schedule::{
    alpha, alpha_prime, alpha_sq_integral, d_sq, d_sq_dt, modified_norm,
    modified_norm_dsq_route, modified_norm_from_moments, rt_matrix, select_eps, EpsSelection,
};
