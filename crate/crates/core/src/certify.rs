//! Contraction certificates (A, kappa, R, eps) for the drift condition
//!
//!   (v - v', b(z) - b(z')) . A (z - z')  <=  -kappa |z - z'|^2
//!
//! for |z - z'| >= R, built from the Lyapunov solution of the linear damped
//! oscillator and the perturbation bounds, plus a seeded falsifier.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{sym_eig_max, sym_eig_min};
use crate::model::ModelSpec;

/// Witness of the drift contraction condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCertificate {
    /// Symmetric positive definite 2d x 2d matrix.
    pub a: DMatrix<f64>,
    /// Contraction rate of the unperturbed quadratic form.
    pub kappa: f64,
    /// Exclusion radius: the bound holds for |z - z'| >= R.
    pub r: f64,
    /// Effective rate outside radius R.
    pub eps_contract: f64,
    /// Spectral norm of A.
    pub a_opnorm: f64,
}

impl ContractionCertificate {
    /// Check the structural invariants (symmetry, positivity, rate ordering).
    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        if self.a.ncols() != n {
            return Err(Error::InvalidInput("certificate: A must be square".into()));
        }
        if (&self.a - self.a.transpose()).abs().max() > 1e-12 {
            return Err(Error::InvalidInput("certificate: A must be symmetric".into()));
        }
        if sym_eig_min(&self.a) <= 0.0 {
            return Err(Error::InvalidInput("certificate: A must be positive definite".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidInput("certificate: kappa must be positive".into()));
        }
        if self.r < 0.0 {
            return Err(Error::InvalidInput("certificate: R must be nonnegative".into()));
        }
        if self.eps_contract <= 0.0 || self.eps_contract > self.kappa + 1e-12 {
            return Err(Error::InvalidInput(
                "certificate: eps_contract must lie in (0, kappa]".into(),
            ));
        }
        if (self.a_opnorm - sym_eig_max(&self.a)).abs() > 1e-12 * self.a_opnorm.max(1.0) {
            return Err(Error::InvalidInput("certificate: A_opnorm != lambda_max(A)".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.a.nrows() / 2
    }
}

/// Solve A M + M^T A = -Id for symmetric A via the vectorized dense system.
/// M must be Hurwitz.
pub fn solve_lyapunov(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "solve_lyapunov: M must be square");
    for eig in m.complex_eigenvalues().iter() {
        if eig.re >= 0.0 {
            return Err(Error::NotHurwitz { re: eig.re, im: eig.im });
        }
    }
    // vec(A M) = (M^T (x) I) vec(A), vec(M^T A) = (I (x) M^T) vec(A)
    let n2 = n * n;
    let mut sys = DMatrix::zeros(n2, n2);
    for i in 0..n {
        for j in 0..n {
            let row = i + j * n; // vec index of (i, j), column-major
            for k in 0..n {
                // (A M)_{ij} = sum_k A_{ik} M_{kj}
                sys[(row, i + k * n)] += m[(k, j)];
                // (M^T A)_{ij} = sum_k M_{ki} A_{kj}
                sys[(row, k + j * n)] += m[(k, i)];
            }
        }
    }
    let mut rhs = DVector::zeros(n2);
    for i in 0..n {
        rhs[i + i * n] = -1.0;
    }
    let sol = sys.lu().solve(&rhs).ok_or_else(|| Error::Solver {
        msg: "lyapunov: singular vectorized system".into(),
        history: vec![],
    })?;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = sol[i + j * n];
        }
    }
    // the solution of the Lyapunov equation with symmetric RHS is symmetric;
    // clean roundoff
    let a = (&a + a.transpose()) * 0.5;
    Ok(a)
}

/// Drift matrix of the linear system (v, -x - gamma v).
pub fn oscillator_matrix(gamma: f64, d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        m[(i, d + i)] = 1.0;
        m[(d + i, i)] = -1.0;
        m[(d + i, d + i)] = -gamma;
    }
    m
}

/// Lyapunov certificate for the linear drift: A M + M^T A = -Id gives
/// z . (A M z) = -|z|^2 / 2 exactly, so kappa = 1/2.
pub fn certify_linear(gamma: f64, d: usize) -> Result<(DMatrix<f64>, f64)> {
    if gamma <= 0.0 {
        return Err(Error::InvalidInput("certify_linear: gamma must be positive".into()));
    }
    let m = oscillator_matrix(gamma, d);
    let a = solve_lyapunov(&m)?;
    Ok((a, 0.5))
}

/// Analytic bounds on the perturbation F feeding the perturbed certificate.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationBounds {
    /// Global sup of |grad F|.
    pub grad_f_sup: f64,
    /// sup of |grad F(z)| over |z| >= m_rad.
    pub kappa_prime: f64,
    /// Radius beyond which kappa_prime applies.
    pub m_rad: f64,
}

impl PerturbationBounds {
    pub fn from_model(model: &ModelSpec) -> Result<Self> {
        match model.perturbation() {
            Some(p) => Ok(PerturbationBounds {
                grad_f_sup: p.grad_sup(model.dim),
                kappa_prime: p.kappa_prime(model.dim),
                m_rad: p.m_rad(),
            }),
            None => match model.gamma() {
                Some(_) => Ok(PerturbationBounds { grad_f_sup: 0.0, kappa_prime: 0.0, m_rad: 0.0 }),
                None => Err(Error::Unsupported(
                    "perturbation bounds require a built-in drift family".into(),
                )),
            },
        }
    }
}

/// Fraction of the R -> infinity rate that the searched R must retain.
pub const DEFAULT_TARGET_FRACTION: f64 = 0.5;

/// Extend a linear certificate to b = -x - gamma v + F using the
/// admissibility condition kappa' < kappa / |A| and the smallest radius R on
/// a geometric grid {2^k} reaching the target fraction of the limit rate.
pub fn certify_perturbed(
    a: &DMatrix<f64>,
    kappa: f64,
    bounds: &PerturbationBounds,
    target_fraction: f64,
) -> Result<ContractionCertificate> {
    if bounds.kappa_prime > bounds.grad_f_sup + 1e-15 {
        return Err(Error::InvalidInput(
            "certify_perturbed: kappa_prime cannot exceed grad_f_sup".into(),
        ));
    }
    if bounds.m_rad < 0.0 {
        return Err(Error::InvalidInput("certify_perturbed: m_rad must be nonnegative".into()));
    }
    if !(0.0 < target_fraction && target_fraction < 1.0) {
        return Err(Error::InvalidInput(
            "certify_perturbed: target_fraction must lie in (0, 1)".into(),
        ));
    }
    let a_opnorm = sym_eig_max(a);
    if bounds.kappa_prime >= kappa / a_opnorm {
        return Err(Error::Infeasible(format!(
            "perturbation too strong: requires |grad F| <= kappa' < kappa/|A| beyond radius M, \
             but kappa' = {:.6} >= kappa/|A| = {:.6}/{:.6} = {:.6}",
            bounds.kappa_prime,
            kappa,
            a_opnorm,
            kappa / a_opnorm
        )));
    }
    let eps_limit = kappa - a_opnorm * bounds.kappa_prime;
    let target = target_fraction * eps_limit;
    let eps_at = |r: f64| kappa - a_opnorm * (2.0 * bounds.m_rad * bounds.grad_f_sup / r + bounds.kappa_prime);
    let (r, eps_contract) = if bounds.m_rad * bounds.grad_f_sup == 0.0 {
        (0.0, eps_limit)
    } else {
        let mut found = None;
        for k in -20..=60 {
            let r = 2f64.powi(k);
            if eps_at(r) >= target {
                found = Some((r, eps_at(r)));
                break;
            }
        }
        found.ok_or_else(|| Error::Infeasible("no radius on the search grid reaches the target rate".into()))?
    };
    let cert = ContractionCertificate { a: a.clone(), kappa, r, eps_contract, a_opnorm };
    cert.validate()?;
    Ok(cert)
}

/// One sampled pair that violated the contraction condition.
#[derive(Debug, Clone)]
pub struct Violation {
    pub z: DVector<f64>,
    pub zp: DVector<f64>,
    pub margin: f64,
}

/// Falsifier output: worst margin over all sampled pairs (negative margins
/// mean the condition held with room to spare).
#[derive(Debug, Clone)]
pub struct FalsifyReport {
    pub n_pairs: usize,
    pub n_violations: usize,
    pub worst_margin: f64,
    pub worst_pair: Option<Violation>,
    /// Relative tolerance below which a positive margin counts as roundoff.
    pub tolerance_rel: f64,
    pub radius_lo: f64,
    pub radius_hi: f64,
}

impl FalsifyReport {
    pub fn passed(&self) -> bool {
        self.n_violations == 0
    }
}

const FALSIFY_TOL_REL: f64 = 1e-12;

/// Sample pairs with |z - z'| >= R (radius log-uniform on
/// [max(R, 1e-3), 100 R + 10]) and evaluate the contraction margin
/// (v - v', b(z) - b(z')) . A (z - z') + eps |z - z'|^2. Positive margins
/// beyond the roundoff tolerance are violations. Deterministic in
/// (seed, n_pairs); pairs are split across workers by stream index.
pub fn falsify_condition(
    cert: &ContractionCertificate,
    model: &ModelSpec,
    n_pairs: usize,
    seed: u64,
) -> Result<FalsifyReport> {
    if cert.dim() != model.dim {
        return Err(Error::DimensionMismatch(format!(
            "certificate dimension {} vs model dimension {}",
            cert.dim(),
            model.dim
        )));
    }
    let d = model.dim;
    let lo = cert.r.max(1e-3);
    let hi = 100.0 * cert.r + 10.0;
    let tol = FALSIFY_TOL_REL * (1.0 + cert.a_opnorm);

    let chunk = 4096usize;
    let n_chunks = n_pairs.div_ceil(chunk);
    let results: Vec<(usize, f64, Option<Violation>)> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(ci as u64 + 1);
            let count = chunk.min(n_pairs - ci * chunk);
            let mut violations = 0usize;
            let mut worst = f64::NEG_INFINITY;
            let mut worst_pair = None;
            let mut bz = vec![0.0; d];
            let mut bzp = vec![0.0; d];
            for _ in 0..count {
                // center from a box scaled to the pair radius range
                let scale = 1.0 + cert.r;
                let z: Vec<f64> =
                    (0..2 * d).map(|_| scale * 4.0 * (rng.random::<f64>() - 0.5)).collect();
                // log-uniform radius, uniform direction
                let r = lo * (hi / lo).powf(rng.random::<f64>());
                let dir: Vec<f64> = {
                    let raw: Vec<f64> =
                        (0..2 * d).map(|_| rand_distr::StandardNormal.sample(&mut rng)).collect();
                    let norm = raw.iter().map(|t| t * t).sum::<f64>().sqrt().max(1e-300);
                    raw.iter().map(|t| t / norm).collect()
                };
                let zp: Vec<f64> = z.iter().zip(&dir).map(|(zi, di)| zi - r * di).collect();
                model.eval_drift_into(&z[0..d], &z[d..2 * d], &mut bz);
                model.eval_drift_into(&zp[0..d], &zp[d..2 * d], &mut bzp);
                // pairing vector (v - v', b(z) - b(z'))
                let mut pair = DVector::zeros(2 * d);
                let mut dz = DVector::zeros(2 * d);
                for i in 0..d {
                    pair[i] = z[d + i] - zp[d + i];
                    pair[d + i] = bz[i] - bzp[i];
                    dz[i] = z[i] - zp[i];
                    dz[d + i] = z[d + i] - zp[d + i];
                }
                let dz2 = dz.norm_squared();
                let margin = pair.dot(&(&cert.a * &dz)) + cert.eps_contract * dz2;
                let rel = margin / dz2.max(1e-300);
                if rel > worst {
                    worst = rel;
                    worst_pair = Some(Violation {
                        z: DVector::from_vec(z.clone()),
                        zp: DVector::from_vec(zp.clone()),
                        margin: rel,
                    });
                }
                if rel > tol {
                    violations += 1;
                }
            }
            (violations, worst, worst_pair)
        })
        .collect();

    let mut report = FalsifyReport {
        n_pairs,
        n_violations: 0,
        worst_margin: f64::NEG_INFINITY,
        worst_pair: None,
        tolerance_rel: tol,
        radius_lo: lo,
        radius_hi: hi,
    };
    for (v, w, wp) in results {
        report.n_violations += v;
        if w > report.worst_margin {
            report.worst_margin = w;
            report.worst_pair = wp;
        }
    }
    if n_pairs == 0 {
        report.worst_margin = f64::NAN;
    }
    Ok(report)
}

/// Serialize with 17 significant digits so the decimal round-trip is
/// bit-exact.
pub fn certificate_to_string(cert: &ContractionCertificate) -> String {
    let mut s = String::new();
    let n = cert.a.nrows();
    writeln!(s, "# contraction certificate (A is {n}x{n}, row-major)").unwrap();
    let rows: Vec<String> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| format!("{:.16e}", cert.a[(i, j)]))
        .collect();
    writeln!(s, "A = [{}]", rows.join(", ")).unwrap();
    writeln!(s, "kappa = {:.16e}", cert.kappa).unwrap();
    writeln!(s, "R = {:.16e}", cert.r).unwrap();
    writeln!(s, "eps_contract = {:.16e}", cert.eps_contract).unwrap();
    writeln!(s, "A_opnorm = {:.16e}", cert.a_opnorm).unwrap();
    s
}

pub fn write_certificate(cert: &ContractionCertificate, path: &Path) -> Result<()> {
    std::fs::write(path, certificate_to_string(cert))?;
    Ok(())
}

pub fn parse_certificate(text: &str) -> Result<ContractionCertificate> {
    let mut a_vals: Option<Vec<f64>> = None;
    let mut kappa = None;
    let mut r = None;
    let mut eps = None;
    let mut opnorm = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("certificate: bad line '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        let parse = |v: &str| -> Result<f64> {
            v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("certificate: {e} in '{v}'")))
        };
        match key {
            "A" => {
                let inner = value
                    .strip_prefix('[')
                    .and_then(|v| v.strip_suffix(']'))
                    .ok_or_else(|| Error::Parse("certificate: A must be a [..] list".into()))?;
                let vals: Result<Vec<f64>> = inner.split(',').map(|v| parse(v)).collect();
                a_vals = Some(vals?);
            }
            "kappa" => kappa = Some(parse(value)?),
            "R" => r = Some(parse(value)?),
            "eps_contract" => eps = Some(parse(value)?),
            "A_opnorm" => opnorm = Some(parse(value)?),
            other => return Err(Error::Parse(format!("certificate: unknown key '{other}'"))),
        }
    }
    let a_vals = a_vals.ok_or_else(|| Error::Parse("certificate: missing A".into()))?;
    let n = (a_vals.len() as f64).sqrt().round() as usize;
    if n * n != a_vals.len() || n == 0 || n % 2 != 0 {
        return Err(Error::Parse("certificate: A length is not a square of even order".into()));
    }
    let cert = ContractionCertificate {
        a: DMatrix::from_row_slice(n, n, &a_vals),
        kappa: kappa.ok_or_else(|| Error::Parse("certificate: missing kappa".into()))?,
        r: r.ok_or_else(|| Error::Parse("certificate: missing R".into()))?,
        eps_contract: eps.ok_or_else(|| Error::Parse("certificate: missing eps_contract".into()))?,
        a_opnorm: opnorm.ok_or_else(|| Error::Parse("certificate: missing A_opnorm".into()))?,
    };
    Ok(cert)
}

pub fn read_certificate(path: &Path) -> Result<ContractionCertificate> {
    parse_certificate(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Perturbation;

    /// Independent oracle for the d=1 Lyapunov system: solve the 3-unknown
    /// linear system for A = [[p, q], [q, s]] by hand-rolled elimination.
    fn lyapunov_oracle_d1(gamma: f64) -> DMatrix<f64> {
        // M = [[0, 1], [-1, -g]]
        // (AM + M^T A)_{00} = -2q          = -1
        // (AM + M^T A)_{01} = p - q g - s  =  0
        // (AM + M^T A)_{11} = 2q - 2 s g   = -1
        let q = 0.5;
        let s = (2.0 * q + 1.0) / (2.0 * gamma);
        let p = q * gamma + s;
        DMatrix::from_row_slice(2, 2, &[p, q, q, s])
    }

    #[test]
    fn lyapunov_d1_matches_oracle() {
        for &gamma in &[0.5, 1.0, 2.0] {
            let m = oscillator_matrix(gamma, 1);
            let a = solve_lyapunov(&m).unwrap();
            let oracle = lyapunov_oracle_d1(gamma);
            assert!((&a - &oracle).abs().max() < 1e-12, "gamma={gamma}");
            let res = &a * &m + m.transpose() * &a + DMatrix::identity(2, 2);
            assert!(res.abs().max() <= 1e-12);
        }
        // gamma = 1: A = [[1.5, 0.5], [0.5, 1.0]]
        let a = solve_lyapunov(&oscillator_matrix(1.0, 1)).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.5, 0.5, 0.5, 1.0]);
        assert!((&a - &expect).abs().max() < 1e-13);
    }

    #[test]
    fn lyapunov_minus_identity() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        let a = solve_lyapunov(&m).unwrap();
        assert!((&a - DMatrix::identity(2, 2) * 0.5).abs().max() < 1e-14);
    }

    #[test]
    fn lyapunov_rejects_non_hurwitz() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        match solve_lyapunov(&m) {
            Err(Error::NotHurwitz { re, .. }) => assert!(re >= 0.0),
            other => panic!("expected NotHurwitz, got {other:?}"),
        }
    }

    #[test]
    fn linear_certificate_quadratic_form_is_exact() {
        use rand::prelude::*;
        use rand_chacha::ChaCha12Rng;
        for &(gamma, d) in &[(0.5, 1usize), (1.0, 1), (2.0, 1), (1.0, 2), (0.5, 3)] {
            let (a, kappa) = certify_linear(gamma, d).unwrap();
            assert_eq!(kappa, 0.5);
            let m = oscillator_matrix(gamma, d);
            let mut rng = ChaCha12Rng::seed_from_u64(17);
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..10_000 {
                let z = DVector::from_fn(2 * d, |_, _| rng.random::<f64>() - 0.5).normalize();
                let form = z.dot(&(&a * (&m * &z)));
                worst = worst.max(form + kappa * z.norm_squared());
            }
            assert!(worst <= 1e-10, "gamma={gamma} d={d} worst={worst}");
        }
    }

    #[test]
    fn linear_certificate_d2_is_blockwise_d1() {
        let (a1, _) = certify_linear(1.3, 1).unwrap();
        let (a2, _) = certify_linear(1.3, 2).unwrap();
        // Kronecker structure: a2[(i,j) blocks] = a1 entries times Id_2
        for bi in 0..2 {
            for bj in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let expect = if i == j { a1[(bi, bj)] } else { 0.0 };
                        assert!((a2[(2 * bi + i, 2 * bj + j)] - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn perturbed_certificate_admissibility() {
        let (a, kappa) = certify_linear(1.0, 1).unwrap();
        let opnorm = sym_eig_max(&a);
        // characteristic polynomial oracle for the 2x2 A = [[1.5,.5],[.5,1]]:
        // lambda^2 - 2.5 lambda + 1.25 = 0 -> lambda_max = (5 + sqrt 5)/4
        let expect = (5.0 + 5f64.sqrt()) / 4.0;
        assert!((opnorm - expect).abs() < 1e-12);

        // kappa' = 0.1 < 0.5/1.80902 = 0.27639: admissible
        let b = PerturbationBounds { grad_f_sup: 0.1, kappa_prime: 0.1, m_rad: 0.0 };
        let cert = certify_perturbed(&a, kappa, &b, DEFAULT_TARGET_FRACTION).unwrap();
        assert_eq!(cert.r, 0.0);
        assert!((cert.eps_contract - (kappa - opnorm * 0.1)).abs() < 1e-14);

        // kappa' = 0.3 > 0.27639: infeasible
        let b = PerturbationBounds { grad_f_sup: 0.3, kappa_prime: 0.3, m_rad: 0.0 };
        match certify_perturbed(&a, kappa, &b, DEFAULT_TARGET_FRACTION) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("kappa/|A|")),
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn perturbed_certificate_with_radius() {
        let (a, kappa) = certify_linear(1.0, 1).unwrap();
        let b = PerturbationBounds { grad_f_sup: 0.2, kappa_prime: 0.05, m_rad: 2.0 };
        let cert = certify_perturbed(&a, kappa, &b, 0.5).unwrap();
        assert!(cert.r > 0.0);
        assert!(cert.eps_contract < kappa);
        let eps_limit = kappa - cert.a_opnorm * b.kappa_prime;
        assert!(cert.eps_contract >= 0.5 * eps_limit - 1e-14);
        // smallest grid radius: halving R must fall below the target
        let eps_at = |r: f64| kappa - cert.a_opnorm * (2.0 * b.m_rad * b.grad_f_sup / r + b.kappa_prime);
        assert!(eps_at(cert.r / 2.0) < 0.5 * eps_limit);
    }

    #[test]
    fn falsifier_zero_violations_on_valid_linear_certificate() {
        let model = ModelSpec::perturbed_harmonic(1, 1.0, 1.0, Perturbation::None);
        let (a, kappa) = certify_linear(1.0, 1).unwrap();
        let bounds = PerturbationBounds::from_model(&model).unwrap();
        let cert = certify_perturbed(&a, kappa, &bounds, 0.5).unwrap();
        let rep = falsify_condition(&cert, &model, 20_000, 7).unwrap();
        assert_eq!(rep.n_violations, 0, "worst = {}", rep.worst_margin);
    }

    #[test]
    fn falsifier_catches_corrupted_certificate() {
        let model = ModelSpec::perturbed_harmonic(1, 1.0, 1.0, Perturbation::None);
        let (a, kappa) = certify_linear(1.0, 1).unwrap();
        let bounds = PerturbationBounds::from_model(&model).unwrap();
        let mut cert = certify_perturbed(&a, kappa, &bounds, 0.5).unwrap();
        cert.kappa *= 2.0;
        cert.eps_contract = cert.kappa;
        let rep = falsify_condition(&cert, &model, 20_000, 7).unwrap();
        assert!(rep.n_violations >= 1);
        assert!(rep.worst_pair.is_some());
    }

    #[test]
    fn falsifier_empty_report() {
        let model = ModelSpec::perturbed_harmonic(1, 1.0, 1.0, Perturbation::None);
        let (a, kappa) = certify_linear(1.0, 1).unwrap();
        let bounds = PerturbationBounds::from_model(&model).unwrap();
        let cert = certify_perturbed(&a, kappa, &bounds, 0.5).unwrap();
        let rep = falsify_condition(&cert, &model, 0, 7).unwrap();
        assert_eq!(rep.n_pairs, 0);
        assert_eq!(rep.n_violations, 0);
    }

    #[test]
    fn certificate_roundtrip_is_bit_exact() {
        let (a, kappa) = certify_linear(0.7, 2).unwrap();
        let bounds = PerturbationBounds { grad_f_sup: 0.11, kappa_prime: 0.03, m_rad: 1.7 };
        let cert = certify_perturbed(&a, kappa, &bounds, 0.5).unwrap();
        let text = certificate_to_string(&cert);
        let back = parse_certificate(&text).unwrap();
        assert_eq!(cert.a, back.a);
        assert!(cert.kappa == back.kappa && cert.r == back.r);
        assert!(cert.eps_contract == back.eps_contract && cert.a_opnorm == back.a_opnorm);
    }
}
