//! Sparse/banded/dense linear algebra helpers.

mod banded;
mod csr;
mod expm;

pub use banded::BandedLu;
pub use csr::Csr;
pub use expm::{expm, van_loan};

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_eig_max(a: &nalgebra::DMatrix<f64>) -> f64 {
    a.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_eig_min(a: &nalgebra::DMatrix<f64>) -> f64 {
    a.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}
