//! Dense matrix exponential (scaling and squaring) and the Van Loan block
//! integral for exact Ornstein-Uhlenbeck transition covariances.

use nalgebra::DMatrix;

/// exp(A) by scaling-and-squaring with a Taylor kernel; fine for the small
/// (2d x 2d) drift matrices used here.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let norm = a.abs().row_sum().max();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / 2f64.powi(s);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..24 {
        term = (&term * &scaled) / k as f64;
        sum += &term;
        if term.abs().max() < 1e-18 {
            break;
        }
    }
    let mut result = sum;
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Van Loan (1978): returns (Phi, C) with Phi = exp(M t) and
/// C = \int_0^t exp(M s) Q exp(M^T s) ds, via the block exponential of
/// [[-M, Q], [0, M^T]] t.
pub fn van_loan(m: &DMatrix<f64>, q: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut blk = DMatrix::zeros(2 * n, 2 * n);
    blk.view_mut((0, 0), (n, n)).copy_from(&(-m * t));
    blk.view_mut((0, n), (n, n)).copy_from(&(q * t));
    blk.view_mut((n, n), (n, n)).copy_from(&(m.transpose() * t));
    let e = expm(&blk);
    let f22 = e.view((n, n), (n, n)).into_owned();
    let f12 = e.view((0, n), (n, n)).into_owned();
    let phi = f22.transpose();
    let c = &phi * f12;
    // symmetrize against roundoff
    let c = (&c + c.transpose()) * 0.5;
    (phi, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![1.0, -2.0]);
        let e = expm(&a);
        assert!((e[(0, 0)] - 1f64.exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - (-2f64).exp()).abs() < 1e-14);
        assert!(e[(0, 1)].abs() < 1e-16);
    }

    #[test]
    fn expm_rotation() {
        // exp([[0, -t],[t, 0]]) = rotation by t
        let t = 0.7f64;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a);
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-14);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn van_loan_scalar_ou() {
        // dX = -g X dt + sqrt(2 s2) dW: C(t) = s2/g (1 - exp(-2 g t))
        let g = 1.3;
        let s2 = 0.8;
        let m = DMatrix::from_element(1, 1, -g);
        let q = DMatrix::from_element(1, 1, 2.0 * s2);
        let t = 0.37;
        let (phi, c) = van_loan(&m, &q, t);
        assert!((phi[(0, 0)] - (-g * t).exp()).abs() < 1e-13);
        let expect = s2 / g * (1.0 - (-2.0 * g * t).exp());
        assert!((c[(0, 0)] - expect).abs() < 1e-13);
    }
}
