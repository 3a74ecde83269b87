//! The time-dependent modified-norm machinery: the weight alpha(t), the
//! mixed-derivative matrix D_t^2, the dissipation matrix R_t, and the
//! epsilon selection rule.

use nalgebra::DMatrix;

use crate::grid::{gradient, mu_inner, mu_mean, GridField, PhaseGrid};
use crate::model::{DriftBounds, DriftJacobian};

/// alpha(t) = 1 - e^{-t/3}; 0 at t = 0, increasing to 1.
pub fn alpha(t: f64) -> f64 {
    assert!(t >= 0.0, "alpha: contract violation, t must be nonnegative");
    -(-t / 3.0).exp_m1()
}

pub fn alpha_prime(t: f64) -> f64 {
    assert!(t >= 0.0, "alpha_prime: contract violation, t must be nonnegative");
    (-t / 3.0).exp() / 3.0
}

/// Closed form of int_0^t alpha(s)^2 ds.
pub fn alpha_sq_integral(t: f64) -> f64 {
    assert!(t >= 0.0, "alpha_sq_integral: contract violation");
    t + 6.0 * (-t / 3.0).exp_m1() - 1.5 * (-2.0 * t / 3.0).exp_m1()
}

/// D_t^2 = eps [[a^3 Id, -a^2 Id], [-a^2 Id, a Id]] (2d x 2d).
pub fn d_sq(t: f64, eps_norm: f64, d: usize) -> DMatrix<f64> {
    assert!(eps_norm > 0.0, "d_sq: eps_norm must be positive");
    let a = alpha(t);
    block_matrix(d, eps_norm * a * a * a, -eps_norm * a * a, -eps_norm * a * a, eps_norm * a)
}

/// d/dt D_t^2 = eps [[3 a^2 a' Id, -2 a a' Id], [-2 a a' Id, a' Id]].
pub fn d_sq_dt(t: f64, eps_norm: f64, d: usize) -> DMatrix<f64> {
    let a = alpha(t);
    let ap = alpha_prime(t);
    block_matrix(
        d,
        eps_norm * 3.0 * a * a * ap,
        -eps_norm * 2.0 * a * ap,
        -eps_norm * 2.0 * a * ap,
        eps_norm * ap,
    )
}

fn block_matrix(d: usize, m11: f64, m12: f64, m21: f64, m22: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        m[(i, i)] = m11;
        m[(i, d + i)] = m12;
        m[(d + i, i)] = m21;
        m[(d + i, d + i)] = m22;
    }
    m
}

/// R_t = -2 sigma^2 [[0,0],[0,Id]] + d/dt(D_t^2) + 2 D_t^2 J, with
/// J = [[0, dxb], [Id, dvb]]; its quadratic form bounds d/dt N_t.
pub fn rt_matrix(t: f64, eps_norm: f64, jac: &DriftJacobian, sigma: f64) -> DMatrix<f64> {
    assert!(t >= 0.0, "rt_matrix: contract violation, t must be nonnegative");
    let d = jac.dxb.nrows();
    let j = jac.commutation_block();
    let mut r = d_sq_dt(t, eps_norm, d) + d_sq(t, eps_norm, d) * j * 2.0;
    for i in 0..d {
        r[(d + i, d + i)] -= 2.0 * sigma * sigma;
    }
    r
}

/// Epsilon selection for the modified norm: with
/// B = |dxb|_inf + |dvb|_inf + 1, completing the square on the cross term
/// 2 B a e |x||v| against (a^2 e / 2)|x|^2 costs 2 B^2 e |v|^2, so
/// M = B + 2 B^2 and eps = 2 sigma^2 / (M + 1/2) makes the |v|^2
/// coefficient <= -eps a^2 / 2.
#[derive(Debug, Clone, Copy)]
pub struct EpsSelection {
    pub eps_norm: f64,
    pub m_coeff: f64,
    pub b_const: f64,
}

pub fn select_eps(bounds: &DriftBounds, sigma: f64) -> EpsSelection {
    let b = bounds.grad_bx_sup + bounds.grad_bv_sup + 1.0;
    let m = b + 2.0 * b * b;
    EpsSelection { eps_norm: 2.0 * sigma * sigma / (m + 0.5), m_coeff: m, b_const: b }
}

/// Modified norm N_t = ||g||^2 + eps a(t) ||(d_v - a(t) d_x) g||^2 in
/// L^2(mu), after subtracting the mu-mean of g.
pub fn modified_norm(
    g: &GridField,
    grid: &PhaseGrid,
    mu: &GridField,
    t: f64,
    eps_norm: f64,
) -> f64 {
    let mean = mu_mean(&g.values, mu, grid);
    let centered: Vec<f64> = g.values.iter().map(|x| x - mean).collect();
    let (gx, gv) = gradient(&centered, grid);
    let a = alpha(t);
    let mixed: Vec<f64> = gv.iter().zip(&gx).map(|(dv, dx)| dv - a * dx).collect();
    mu_inner(&centered, &centered, mu, grid) + eps_norm * a * mu_inner(&mixed, &mixed, mu, grid)
}

/// Same quantity through the D_t^2 quadratic form on the stacked gradient;
/// kept as an independent route for the algebraic-identity check.
pub fn modified_norm_dsq_route(
    g: &GridField,
    grid: &PhaseGrid,
    mu: &GridField,
    t: f64,
    eps_norm: f64,
) -> f64 {
    let mean = mu_mean(&g.values, mu, grid);
    let centered: Vec<f64> = g.values.iter().map(|x| x - mean).collect();
    let (gx, gv) = gradient(&centered, grid);
    let dsq = d_sq(t, eps_norm, 1);
    let w = grid.cell_weight();
    let mut quad = 0.0;
    for k in 0..centered.len() {
        let (a, b) = (gx[k], gv[k]);
        let q = dsq[(0, 0)] * a * a + (dsq[(0, 1)] + dsq[(1, 0)]) * a * b + dsq[(1, 1)] * b * b;
        quad += q * mu.values[k];
    }
    mu_inner(&centered, &centered, mu, grid) + quad * w
}

/// Reconstruct N_t from recorded second moments of the gradient: N =
/// |g|^2 + eps a (|d_v g|^2 - 2 a <d_x g, d_v g> + a^2 |d_x g|^2).
pub fn modified_norm_from_moments(
    norm_sq: f64,
    gradx_sq: f64,
    gradv_sq: f64,
    cross_xv: f64,
    t: f64,
    eps_norm: f64,
) -> f64 {
    let a = alpha(t);
    norm_sq + eps_norm * a * (gradv_sq - 2.0 * a * cross_xv + a * a * gradx_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FieldKind;
    use crate::linalg::{sym_eig_max, sym_eig_min};
    use crate::model::{ModelSpec, Perturbation, PhasePoint};

    #[test]
    fn alpha_endpoints() {
        assert_eq!(alpha(0.0), 0.0);
        assert!((alpha(1e9) - 1.0).abs() < 1e-15);
        assert!(alpha(1.0) > alpha(0.5));
        let dsq0 = d_sq(0.0, 0.7, 1);
        assert!(dsq0.abs().max() == 0.0);
    }

    #[test]
    #[should_panic(expected = "contract violation")]
    fn alpha_negative_time_panics() {
        let _ = alpha(-0.1);
    }

    #[test]
    fn d_sq_eigenvalues_and_norm_bound() {
        // characteristic polynomial of the 2x2 block over eps:
        // det = a^4 - a^4 = 0, trace = a^3 + a => eigenvalues {0, a(1+a^2)}
        let eps = 0.37;
        for &t in &[0.0, 0.3, 1.0, 2.5, 10.0, 100.0] {
            let m = d_sq(t, eps, 1);
            let a = alpha(t);
            let lam_max = sym_eig_max(&m);
            let lam_min = sym_eig_min(&m);
            assert!((lam_max - eps * a * (1.0 + a * a)).abs() < 1e-14);
            assert!(lam_min.abs() < 1e-14);
            // |D_t|^2 <= 2 eps for all t
            assert!(lam_max <= 2.0 * eps + 1e-15);
        }
    }

    #[test]
    fn alpha_sq_integral_matches_quadrature() {
        // Simpson oracle
        let quad = |t: f64| {
            let n = 4000;
            let h = t / n as f64;
            let f = |s: f64| alpha(s) * alpha(s);
            let mut acc = f(0.0) + f(t);
            for k in 1..n {
                acc += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        };
        for &t in &[0.5, 1.0, 3.0, 10.0] {
            assert!((alpha_sq_integral(t) - quad(t)).abs() < 1e-10, "t={t}");
        }
        // frozen closed-form value at t = 1
        let expect = 1.0 - 6.0 * (1.0 - (-1.0f64 / 3.0).exp()) + 1.5 * (1.0 - (-2.0f64 / 3.0).exp());
        assert!((alpha_sq_integral(1.0) - expect).abs() < 1e-15);
        assert!((expect - 0.029060).abs() < 1e-6);
        assert!(expect >= 1.0 / 40.0);
    }

    #[test]
    fn select_eps_plugin_and_inequality() {
        // hypothetical B = 1: bounds with dxb = dvb = 0
        let bounds = DriftBounds {
            grad_b_sup: 0.0,
            grad_bx_sup: 0.0,
            grad_bv_sup: 0.0,
            one_sided_k: 0.0,
            margin: 0.0,
        };
        let sel = select_eps(&bounds, 1.0);
        assert_eq!(sel.b_const, 1.0);
        assert_eq!(sel.m_coeff, 3.0);
        assert!((sel.eps_norm - 2.0 / 3.5).abs() < 1e-15);
        // M eps - 2 sigma^2 <= -eps/2
        assert!(sel.m_coeff * sel.eps_norm - 2.0 <= -sel.eps_norm / 2.0 + 1e-15);
    }

    #[test]
    fn rt_zero_time_structure() {
        // at t = 0: alpha = 0 kills every d/dt(D^2) and D^2 entry, so
        // R_0 = diag(0, alpha'(0) eps - 2 sigma^2) with alpha'(0) = 1/3
        let model = ModelSpec::perturbed_harmonic(1, 1.0, 1.0, Perturbation::None);
        let jac = model.eval_jacobian(&PhasePoint::new(vec![0.4], vec![-0.2])).unwrap();
        let eps = 0.11;
        let r = rt_matrix(0.0, eps, &jac, 1.0);
        assert!(r[(0, 0)].abs() < 1e-15);
        assert!(r[(0, 1)].abs() < 1e-15);
        assert!((r[(1, 0)] - 2.0 * eps * alpha(0.0) * (1.0 - alpha_prime(0.0))).abs() < 1e-15);
        assert!((r[(1, 1)] - (eps / 3.0 - 2.0)).abs() < 1e-14);
    }

    #[test]
    fn rt_matches_finite_difference_of_dsq() {
        // independent oracle: differentiate D_t^2 numerically
        let model = ModelSpec::perturbed_harmonic(
            1,
            0.9,
            1.4,
            Perturbation::Sine { delta: 0.2, freq_x: 1.0, freq_v: 2.0 },
        );
        let jac = model.eval_jacobian(&PhasePoint::new(vec![0.7], vec![0.1])).unwrap();
        let eps = 0.23;
        let sigma = 0.9;
        for &t in &[0.2, 1.0, 4.0] {
            let h = 1e-6;
            let ddt = (d_sq(t + h, eps, 1) - d_sq(t - h, eps, 1)) / (2.0 * h);
            let mut expect = ddt + d_sq(t, eps, 1) * jac.commutation_block() * 2.0;
            expect[(1, 1)] -= 2.0 * sigma * sigma;
            let r = rt_matrix(t, eps, &jac, sigma);
            assert!((&r - &expect).abs().max() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn modified_norm_routes_agree_and_t0_is_plain_norm() {
        let grid = PhaseGrid::centered(3.0, 3.0, 24, 24).unwrap();
        let mut mu = GridField::from_fn(&grid, FieldKind::Density, |x, v| {
            (-(x * x + v * v) / 2.0).exp()
        });
        mu.normalize_mass(&grid);
        let g = GridField::from_fn(&grid, FieldKind::Observable, |x, v| {
            (x * 0.7).sin() + 0.3 * x * v
        });
        let eps = 0.41;
        // t = 0: exactly the centered L2 norm
        let n0 = modified_norm(&g, &grid, &mu, 0.0, eps);
        let mean = mu_mean(&g.values, &mu, &grid);
        let centered: Vec<f64> = g.values.iter().map(|x| x - mean).collect();
        let plain = mu_inner(&centered, &centered, &mu, &grid);
        assert_eq!(n0, plain);
        // routes agree at t = 1
        let a = modified_norm(&g, &grid, &mu, 1.0, eps);
        let b = modified_norm_dsq_route(&g, &grid, &mu, 1.0, eps);
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        // constant field: zero after mean subtraction
        let c = GridField::constant(&grid, 5.0, FieldKind::Observable);
        assert!(modified_norm(&c, &grid, &mu, 2.0, eps).abs() < 1e-25);
    }
}
