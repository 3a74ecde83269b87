//! Drift families for the kinetic Langevin system
//!
//!   dX = V dt,   dV = b(X, V) dt + sqrt(2) sigma dW
//!
//! together with their analytic Jacobians and the global bounds
//! (block gradient sups, one-sided Lipschitz constant) that the
//! certifier, the norm machinery and the coupling checks consume.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A point z = (x, v) in phase space R^d x R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        assert_eq!(x.len(), v.len(), "phase point: x and v must have equal length");
        assert!(!x.is_empty(), "phase point: dimension must be >= 1");
        assert!(
            x.iter().chain(v.iter()).all(|t| t.is_finite()),
            "phase point: entries must be finite"
        );
        PhasePoint { x: DVector::from_vec(x), v: DVector::from_vec(v) }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Stacked (x, v) as a 2d-vector.
    pub fn stacked(&self) -> DVector<f64> {
        let d = self.dim();
        let mut z = DVector::zeros(2 * d);
        z.rows_mut(0, d).copy_from(&self.x);
        z.rows_mut(d, d).copy_from(&self.v);
        z
    }

    pub fn from_stacked(z: &DVector<f64>) -> Self {
        let d2 = z.len();
        assert!(d2 % 2 == 0 && d2 >= 2);
        let d = d2 / 2;
        PhasePoint { x: z.rows(0, d).into_owned(), v: z.rows(d, d).into_owned() }
    }
}

/// Confining potential for the equilibrium drift -grad U - gamma v.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// U(x) = a |x|^2 / 2
    Quadratic { a: f64 },
}

impl Potential {
    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Potential::Quadratic { a } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = a * xi;
                }
            }
        }
    }

    pub fn grad_at(&self, xi: f64) -> f64 {
        match self {
            Potential::Quadratic { a } => a * xi,
        }
    }

    pub fn value_at(&self, xi: f64) -> f64 {
        match self {
            Potential::Quadratic { a } => 0.5 * a * xi * xi,
        }
    }

    /// Hessian (d x d); constant for the quadratic family.
    pub fn hessian(&self, d: usize, _x: &[f64]) -> DMatrix<f64> {
        match self {
            Potential::Quadratic { a } => DMatrix::identity(d, d) * *a,
        }
    }

    pub fn hessian_sup(&self) -> f64 {
        match self {
            Potential::Quadratic { a } => a.abs(),
        }
    }
}

/// Closed-form perturbation families F(x, v) added to the harmonic drift.
/// Restricted to families with analytic gradient and sup bounds so the
/// certifier works with exact constants.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    None,
    /// F_i = delta * sin(freq_x * x_i + freq_v * v_i)
    Sine { delta: f64, freq_x: f64, freq_v: f64 },
    /// F_i = delta * exp(-|z|^2 / (2 w^2)); gradient decays radially, so the
    /// exclusion radius R of the certificate is genuinely exercised.
    Bump { delta: f64, width: f64 },
}

impl Perturbation {
    pub fn is_none(&self) -> bool {
        matches!(self, Perturbation::None)
    }

    pub fn eval(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            Perturbation::None => out.fill(0.0),
            Perturbation::Sine { delta, freq_x, freq_v } => {
                for i in 0..x.len() {
                    out[i] = delta * (freq_x * x[i] + freq_v * v[i]).sin();
                }
            }
            Perturbation::Bump { delta, width } => {
                let r2: f64 = x.iter().chain(v.iter()).map(|t| t * t).sum();
                let e = delta * (-r2 / (2.0 * width * width)).exp();
                out.fill(e);
            }
        }
    }

    /// (dF/dx, dF/dv), each d x d.
    pub fn jacobian(&self, x: &[f64], v: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = x.len();
        match self {
            Perturbation::None => (DMatrix::zeros(d, d), DMatrix::zeros(d, d)),
            Perturbation::Sine { delta, freq_x, freq_v } => {
                let mut dx = DMatrix::zeros(d, d);
                let mut dv = DMatrix::zeros(d, d);
                for i in 0..d {
                    let c = (freq_x * x[i] + freq_v * v[i]).cos();
                    dx[(i, i)] = delta * freq_x * c;
                    dv[(i, i)] = delta * freq_v * c;
                }
                (dx, dv)
            }
            Perturbation::Bump { delta, width } => {
                let w2 = width * width;
                let r2: f64 = x.iter().chain(v.iter()).map(|t| t * t).sum();
                let e = delta * (-r2 / (2.0 * w2)).exp();
                let mut dx = DMatrix::zeros(d, d);
                let mut dv = DMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        dx[(i, j)] = -e * x[j] / w2;
                        dv[(i, j)] = -e * v[j] / w2;
                    }
                }
                (dx, dv)
            }
        }
    }

    /// Exact sup over z of the spectral norm of the d x 2d matrix grad F.
    pub fn grad_sup(&self, d: usize) -> f64 {
        match self {
            Perturbation::None => 0.0,
            // rows have disjoint supports: norm = max_i |(d fx cos, d fv cos)|
            Perturbation::Sine { delta, freq_x, freq_v } => {
                delta.abs() * (freq_x * freq_x + freq_v * freq_v).sqrt()
            }
            // rank-one rows: |grad F| = sqrt(d) * delta |z| exp(-|z|^2/2w^2) / w^2,
            // maximized at |z| = w
            Perturbation::Bump { delta, width } => {
                (d as f64).sqrt() * delta.abs() * (-0.5f64).exp() / width
            }
        }
    }

    /// Radius beyond which `kappa_prime` bounds |grad F|.
    pub fn m_rad(&self) -> f64 {
        match self {
            Perturbation::None | Perturbation::Sine { .. } => 0.0,
            Perturbation::Bump { width, .. } => 3.0 * width,
        }
    }

    /// sup over |z| >= m_rad of |grad F(z)|.
    pub fn kappa_prime(&self, d: usize) -> f64 {
        match self {
            Perturbation::None => 0.0,
            Perturbation::Sine { .. } => self.grad_sup(d),
            // rho exp(-rho^2/2w^2) is decreasing past rho = w, so the sup on
            // |z| >= 3w is attained at the boundary
            Perturbation::Bump { delta, width } => {
                (d as f64).sqrt() * delta.abs() * 3.0 * (-4.5f64).exp() / width
            }
        }
    }
}

type DriftFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&[f64], &[f64]) -> (DMatrix<f64>, DMatrix<f64>) + Send + Sync>;

/// Drift b(x, v) of the velocity equation.
#[derive(Clone)]
pub enum DriftFamily {
    /// b = -grad U(x) - gamma v (conservative / equilibrium case)
    Equilibrium { potential: Potential, gamma: f64 },
    /// b = -x - gamma v + F(x, v)
    PerturbedHarmonic { gamma: f64, perturbation: Perturbation },
    /// User-supplied drift; Jacobian optional.
    Custom { drift: DriftFn, jacobian: Option<JacobianFn> },
}

impl fmt::Debug for DriftFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftFamily::Equilibrium { potential, gamma } => f
                .debug_struct("Equilibrium")
                .field("potential", potential)
                .field("gamma", gamma)
                .finish(),
            DriftFamily::PerturbedHarmonic { gamma, perturbation } => f
                .debug_struct("PerturbedHarmonic")
                .field("gamma", gamma)
                .field("perturbation", perturbation)
                .finish(),
            DriftFamily::Custom { jacobian, .. } => f
                .debug_struct("Custom")
                .field("jacobian", &jacobian.is_some())
                .finish(),
        }
    }
}

/// Analytic Jacobian blocks of b at a point.
#[derive(Debug, Clone)]
pub struct DriftJacobian {
    pub dxb: DMatrix<f64>,
    pub dvb: DMatrix<f64>,
}

impl DriftJacobian {
    /// The block matrix J = [[0, dxb], [Id, dvb]] entering the gradient
    /// commutation relation grad(L g) = L grad g + J grad g.
    pub fn commutation_block(&self) -> DMatrix<f64> {
        let d = self.dxb.nrows();
        let mut j = DMatrix::zeros(2 * d, 2 * d);
        j.view_mut((0, d), (d, d)).copy_from(&self.dxb);
        j.view_mut((d, 0), (d, d)).copy_from(&DMatrix::identity(d, d));
        j.view_mut((d, d), (d, d)).copy_from(&self.dvb);
        j
    }

    /// Jacobian of the full phase-space vector field (v, b(x,v)):
    /// [[0, Id], [dxb, dvb]]. Its symmetric part controls the one-sided
    /// Lipschitz constant.
    pub fn full_field_jacobian(&self) -> DMatrix<f64> {
        let d = self.dxb.nrows();
        let mut j = DMatrix::zeros(2 * d, 2 * d);
        j.view_mut((0, d), (d, d)).copy_from(&DMatrix::identity(d, d));
        j.view_mut((d, 0), (d, d)).copy_from(&self.dxb);
        j.view_mut((d, d), (d, d)).copy_from(&self.dvb);
        j
    }
}

/// Global drift bounds reported by [`ModelSpec::drift_bounds`].
#[derive(Debug, Clone, Copy)]
pub struct DriftBounds {
    /// sup_z of the spectral norm of the d x 2d matrix [dxb dvb].
    pub grad_b_sup: f64,
    /// sup_z |dxb| (spectral).
    pub grad_bx_sup: f64,
    /// sup_z |dvb| (spectral).
    pub grad_bv_sup: f64,
    /// One-sided Lipschitz constant of the full field (v, b): sampled
    /// sup of lambda_max(sym J_full) plus `margin`.
    pub one_sided_k: f64,
    /// Declared safety margin included in `one_sided_k` (zero when the
    /// Jacobian is constant and the sup is exact).
    pub margin: f64,
}

/// Model of eq. (1): dimension, diffusion coefficient and drift family.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub dim: usize,
    pub sigma: f64,
    pub drift: DriftFamily,
}

/// Safety margin added to the sampled one-sided Lipschitz constant for
/// state-dependent Jacobians.
pub const ONE_SIDED_K_MARGIN: f64 = 0.02;

impl ModelSpec {
    pub fn new(dim: usize, sigma: f64, drift: DriftFamily) -> Self {
        assert!(dim >= 1, "model: dimension must be >= 1");
        assert!(sigma > 0.0, "model: sigma must be positive");
        if let DriftFamily::Equilibrium { gamma, .. }
        | DriftFamily::PerturbedHarmonic { gamma, .. } = &drift
        {
            assert!(*gamma > 0.0, "model: gamma must be positive");
        }
        ModelSpec { dim, sigma, drift }
    }

    pub fn equilibrium(dim: usize, sigma: f64, gamma: f64, a: f64) -> Self {
        Self::new(dim, sigma, DriftFamily::Equilibrium { potential: Potential::Quadratic { a }, gamma })
    }

    pub fn perturbed_harmonic(dim: usize, sigma: f64, gamma: f64, perturbation: Perturbation) -> Self {
        Self::new(dim, sigma, DriftFamily::PerturbedHarmonic { gamma, perturbation })
    }

    pub fn gamma(&self) -> Option<f64> {
        match &self.drift {
            DriftFamily::Equilibrium { gamma, .. }
            | DriftFamily::PerturbedHarmonic { gamma, .. } => Some(*gamma),
            DriftFamily::Custom { .. } => None,
        }
    }

    pub fn perturbation(&self) -> Option<&Perturbation> {
        match &self.drift {
            DriftFamily::PerturbedHarmonic { perturbation, .. } => Some(perturbation),
            _ => None,
        }
    }

    /// b(x, v) into `out`, no allocation; used by the integrators and the
    /// generator assembly.
    pub fn eval_drift_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.dim, "eval_drift: dimension mismatch");
        assert_eq!(v.len(), self.dim, "eval_drift: dimension mismatch");
        assert_eq!(out.len(), self.dim);
        match &self.drift {
            DriftFamily::Equilibrium { potential, gamma } => {
                potential.grad(x, out);
                for i in 0..self.dim {
                    out[i] = -out[i] - gamma * v[i];
                }
            }
            DriftFamily::PerturbedHarmonic { gamma, perturbation } => {
                perturbation.eval(x, v, out);
                for i in 0..self.dim {
                    out[i] += -x[i] - gamma * v[i];
                }
            }
            DriftFamily::Custom { drift, .. } => drift(x, v, out),
        }
    }

    pub fn eval_drift(&self, z: &PhasePoint) -> DVector<f64> {
        assert_eq!(z.dim(), self.dim, "eval_drift: dimension mismatch");
        let mut out = vec![0.0; self.dim];
        self.eval_drift_into(z.x.as_slice(), z.v.as_slice(), &mut out);
        DVector::from_vec(out)
    }

    pub fn eval_jacobian(&self, z: &PhasePoint) -> Result<DriftJacobian> {
        assert_eq!(z.dim(), self.dim, "eval_jacobian: dimension mismatch");
        let d = self.dim;
        match &self.drift {
            DriftFamily::Equilibrium { potential, gamma } => Ok(DriftJacobian {
                dxb: -potential.hessian(d, z.x.as_slice()),
                dvb: DMatrix::identity(d, d) * (-gamma),
            }),
            DriftFamily::PerturbedHarmonic { gamma, perturbation } => {
                let (dxf, dvf) = perturbation.jacobian(z.x.as_slice(), z.v.as_slice());
                Ok(DriftJacobian {
                    dxb: dxf - DMatrix::identity(d, d),
                    dvb: dvf - DMatrix::identity(d, d) * *gamma,
                })
            }
            DriftFamily::Custom { jacobian, .. } => match jacobian {
                Some(jac) => {
                    let (dxb, dvb) = jac(z.x.as_slice(), z.v.as_slice());
                    Ok(DriftJacobian { dxb, dvb })
                }
                None => Err(Error::Unsupported(
                    "custom drift has no Jacobian callback".into(),
                )),
            },
        }
    }

    /// Closed-form gradient sups and the sampled one-sided Lipschitz
    /// constant of the full field (v, b).
    pub fn drift_bounds(&self) -> Result<DriftBounds> {
        let d = self.dim;
        match &self.drift {
            DriftFamily::Custom { .. } => Err(Error::Unsupported(
                "drift_bounds requires a built-in drift family".into(),
            )),
            DriftFamily::Equilibrium { potential, gamma } => {
                let a = potential.hessian_sup();
                let lin = self.linear_one_sided(a, *gamma);
                Ok(DriftBounds {
                    grad_b_sup: (a * a + gamma * gamma).sqrt(),
                    grad_bx_sup: a,
                    grad_bv_sup: *gamma,
                    one_sided_k: lin,
                    margin: 0.0,
                })
            }
            DriftFamily::PerturbedHarmonic { gamma, perturbation } => {
                let gf = perturbation.grad_sup(d);
                let grad_bx = 1.0 + pert_block_sup_x(perturbation, d);
                let grad_bv = gamma + pert_block_sup_v(perturbation, d);
                let lin = self.linear_one_sided(1.0, *gamma);
                let (k, margin) = if perturbation.is_none() {
                    (lin, 0.0)
                } else {
                    let sampled = self.sample_one_sided(*gamma, perturbation);
                    // always-valid coarse cap: lambda_max(sym J) <= linear part + |grad F|
                    let cap = lin + gf;
                    ((sampled + ONE_SIDED_K_MARGIN).min(cap), ONE_SIDED_K_MARGIN)
                };
                Ok(DriftBounds {
                    grad_b_sup: (1.0 + gamma * gamma).sqrt() + gf,
                    grad_bx_sup: grad_bx,
                    grad_bv_sup: grad_bv,
                    one_sided_k: k,
                    margin,
                })
            }
        }
    }

    /// lambda_max(sym [[0, I], [-aI, -gI]]) in closed form: per-coordinate
    /// 2x2 blocks [[0, (1-a)/2], [(1-a)/2, -g]].
    fn linear_one_sided(&self, a: f64, g: f64) -> f64 {
        let off = 0.5 * (1.0 - a);
        -0.5 * g + (0.25 * g * g + off * off).sqrt()
    }

    /// Deterministic sampling of lambda_max(sym J_full(z)) for the
    /// perturbation families, exploiting their low-dimensional structure.
    fn sample_one_sided(&self, gamma: f64, pert: &Perturbation) -> f64 {
        match pert {
            Perturbation::None => self.linear_one_sided(1.0, gamma),
            // Jacobian depends on z only through c = cos(phase) in [-1, 1]:
            // per-coordinate 2x2 blocks [[0, (1 - 1 + d fx c)/2 ... ]]
            Perturbation::Sine { delta, freq_x, freq_v } => {
                let mut worst = f64::NEG_INFINITY;
                let n = 4001;
                for k in 0..n {
                    let c = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
                    let bx = -1.0 + delta * freq_x * c;
                    let bv = -gamma + delta * freq_v * c;
                    let off = 0.5 * (1.0 + bx);
                    let lam = 0.5 * bv + (0.25 * bv * bv + off * off).sqrt();
                    worst = worst.max(lam);
                }
                worst
            }
            // radial profile: sample |z| and the worst split of z between the
            // x and v halves via a coarse angular grid, on 2x2-reduced blocks
            Perturbation::Bump { width, .. } => {
                let d = self.dim;
                let mut worst = f64::NEG_INFINITY;
                let nr = 501;
                let na = 65;
                for kr in 0..nr {
                    let rho = 6.0 * width * kr as f64 / (nr - 1) as f64;
                    for ka in 0..na {
                        let ang = std::f64::consts::PI * ka as f64 / (na - 1) as f64;
                        let xnorm = rho * ang.cos();
                        let vnorm = rho * ang.sin();
                        // representative point with all mass on one coordinate
                        // pair; rank-one structure makes this the extremal case
                        let mut x = vec![0.0; d];
                        let mut v = vec![0.0; d];
                        x[0] = xnorm;
                        v[0] = vnorm;
                        let (dxf, dvf) = pert.jacobian(&x, &v);
                        let jac = DriftJacobian {
                            dxb: dxf - DMatrix::identity(d, d),
                            dvb: dvf - DMatrix::identity(d, d) * gamma,
                        };
                        let full = jac.full_field_jacobian();
                        let sym = (&full + full.transpose()) * 0.5;
                        worst = worst.max(crate::linalg::sym_eig_max(&sym));
                    }
                }
                worst
            }
        }
    }
}

fn pert_block_sup_x(pert: &Perturbation, d: usize) -> f64 {
    match pert {
        Perturbation::None => 0.0,
        Perturbation::Sine { delta, freq_x, .. } => (delta * freq_x).abs(),
        Perturbation::Bump { delta, width } => {
            (d as f64).sqrt() * delta.abs() * (-0.5f64).exp() / width
        }
    }
}

fn pert_block_sup_v(pert: &Perturbation, d: usize) -> f64 {
    match pert {
        Perturbation::None => 0.0,
        Perturbation::Sine { delta, freq_v, .. } => (delta * freq_v).abs(),
        Perturbation::Bump { delta, width } => {
            (d as f64).sqrt() * delta.abs() * (-0.5f64).exp() / width
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn fd_jacobian(m: &ModelSpec, z: &PhasePoint, h: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = m.dim;
        let mut dxb = DMatrix::zeros(d, d);
        let mut dvb = DMatrix::zeros(d, d);
        let mut bp = vec![0.0; d];
        let mut bm = vec![0.0; d];
        for j in 0..d {
            let mut xp = z.x.as_slice().to_vec();
            let mut xm = xp.clone();
            xp[j] += h;
            xm[j] -= h;
            m.eval_drift_into(&xp, z.v.as_slice(), &mut bp);
            m.eval_drift_into(&xm, z.v.as_slice(), &mut bm);
            for i in 0..d {
                dxb[(i, j)] = (bp[i] - bm[i]) / (2.0 * h);
            }
            let mut vp = z.v.as_slice().to_vec();
            let mut vm = vp.clone();
            vp[j] += h;
            vm[j] -= h;
            m.eval_drift_into(z.x.as_slice(), &vp, &mut bp);
            m.eval_drift_into(z.x.as_slice(), &vm, &mut bm);
            for i in 0..d {
                dvb[(i, j)] = (bp[i] - bm[i]) / (2.0 * h);
            }
        }
        (dxb, dvb)
    }

    #[test]
    fn drift_values_match_closed_forms() {
        // PerturbedHarmonic(gamma=1, F=0), z=(1,0): b = -1
        let m = ModelSpec::perturbed_harmonic(1, 1.0, 1.0, Perturbation::None);
        let b = m.eval_drift(&PhasePoint::new(vec![1.0], vec![0.0]));
        assert_eq!(b[0], -1.0);

        // F = 0.2 sin(x+v) at the origin: everything vanishes
        let m = ModelSpec::perturbed_harmonic(
            1,
            1.0,
            1.0,
            Perturbation::Sine { delta: 0.2, freq_x: 1.0, freq_v: 1.0 },
        );
        let b = m.eval_drift(&PhasePoint::new(vec![0.0], vec![0.0]));
        assert_eq!(b[0], 0.0);

        // Equilibrium U = x^2/2, gamma=2, z=(1,3): b = -1 - 6 = -7
        let m = ModelSpec::equilibrium(1, 1.0, 2.0, 1.0);
        let b = m.eval_drift(&PhasePoint::new(vec![1.0], vec![3.0]));
        assert_eq!(b[0], -7.0);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn drift_dimension_mismatch_is_a_contract_violation() {
        let m = ModelSpec::perturbed_harmonic(2, 1.0, 1.0, Perturbation::None);
        let _ = m.eval_drift(&PhasePoint::new(vec![1.0], vec![0.0]));
    }

    #[test]
    fn jacobian_closed_forms() {
        let m = ModelSpec::perturbed_harmonic(1, 1.0, 1.0, Perturbation::None);
        let j = m.eval_jacobian(&PhasePoint::new(vec![0.3], vec![-0.7])).unwrap();
        assert_eq!(j.dxb[(0, 0)], -1.0);
        assert_eq!(j.dvb[(0, 0)], -1.0);

        let delta = 0.25;
        let m = ModelSpec::perturbed_harmonic(
            1,
            1.0,
            1.0,
            Perturbation::Sine { delta, freq_x: 1.0, freq_v: 1.0 },
        );
        let j = m.eval_jacobian(&PhasePoint::new(vec![0.0], vec![0.0])).unwrap();
        assert!((j.dxb[(0, 0)] - (-1.0 + delta)).abs() < 1e-15);
        assert!((j.dvb[(0, 0)] - (-1.0 + delta)).abs() < 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let models = vec![
            ModelSpec::equilibrium(1, 1.0, 2.0, 1.5),
            ModelSpec::perturbed_harmonic(
                1,
                1.0,
                1.0,
                Perturbation::Sine { delta: 0.3, freq_x: 1.0, freq_v: 1.0 },
            ),
            ModelSpec::perturbed_harmonic(2, 0.7, 0.5, Perturbation::Bump { delta: 0.4, width: 1.2 }),
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for m in &models {
            for _ in 0..1000 {
                let x: Vec<f64> = (0..m.dim).map(|_| 4.0 * (rng.random::<f64>() - 0.5)).collect();
                let v: Vec<f64> = (0..m.dim).map(|_| 4.0 * (rng.random::<f64>() - 0.5)).collect();
                let z = PhasePoint::new(x, v);
                let j = m.eval_jacobian(&z).unwrap();
                let (fdx, fdv) = fd_jacobian(m, &z, 1e-5);
                let scale = j.dxb.abs().max().max(j.dvb.abs().max()).max(1.0);
                assert!((&j.dxb - &fdx).abs().max() <= 1e-6 * scale, "{m:?}");
                assert!((&j.dvb - &fdv).abs().max() <= 1e-6 * scale, "{m:?}");
            }
        }
    }

    #[test]
    fn custom_without_jacobian_is_unsupported() {
        let m = ModelSpec::new(
            1,
            1.0,
            DriftFamily::Custom {
                drift: Arc::new(|x, v, out| out[0] = -x[0] - v[0]),
                jacobian: None,
            },
        );
        let err = m.eval_jacobian(&PhasePoint::new(vec![0.0], vec![0.0])).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn linear_one_sided_k_is_zero_for_unit_gamma() {
        // sym([[0,1],[-1,-1]]) = diag(0,-1): eigenvalues {0, -1}
        let m = ModelSpec::perturbed_harmonic(1, 1.0, 1.0, Perturbation::None);
        let b = m.drift_bounds().unwrap();
        assert_eq!(b.one_sided_k, 0.0);
        assert_eq!(b.margin, 0.0);
    }

    #[test]
    fn grad_sup_dominates_sampled_jacobians() {
        let m = ModelSpec::perturbed_harmonic(
            1,
            1.0,
            1.0,
            Perturbation::Sine { delta: 0.3, freq_x: 1.0, freq_v: 1.0 },
        );
        let bounds = m.drift_bounds().unwrap();
        let pert = m.perturbation().unwrap().clone();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let x = vec![8.0 * (rng.random::<f64>() - 0.5)];
            let v = vec![8.0 * (rng.random::<f64>() - 0.5)];
            let (dxf, dvf) = pert.jacobian(&x, &v);
            let mut gf = DMatrix::zeros(1, 2);
            gf[(0, 0)] = dxf[(0, 0)];
            gf[(0, 1)] = dvf[(0, 0)];
            let norm = gf.norm();
            assert!(norm <= pert.grad_sup(1) + 1e-12);
            // and the combined bound dominates [dxb dvb]
            let j = m.eval_jacobian(&PhasePoint::new(x, v)).unwrap();
            let mut full = DMatrix::zeros(1, 2);
            full[(0, 0)] = j.dxb[(0, 0)];
            full[(0, 1)] = j.dvb[(0, 0)];
            assert!(full.norm() <= bounds.grad_b_sup + 1e-12);
        }
    }

    #[test]
    fn equilibrium_dxb_is_symmetric() {
        let m = ModelSpec::equilibrium(3, 1.0, 1.0, 2.0);
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let v: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let j = m.eval_jacobian(&PhasePoint::new(x, v)).unwrap();
            assert!((&j.dxb - j.dxb.transpose()).abs().max() < 1e-14);
        }
    }
}
