//! Synchronous coupling diagnostics: the mean-square growth envelope
//! E|Z_t - Z_t'|^2 <= e^{2Kt} |Z_0 - Z_0'|^2 and the pathwise decay of the
//! certificate form (Z - Z') . A (Z - Z') beyond radius R.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::certify::ContractionCertificate;
use crate::error::{Error, Result};
use crate::mc::integrate::{SdeRunConfig, TrajectorySim};
use crate::model::{ModelSpec, PhasePoint};

#[derive(Debug, Clone)]
pub struct CouplingStats {
    pub times: Vec<f64>,
    pub mean_sq_dist: Vec<f64>,
    pub mean_a_dist: Vec<f64>,
    /// 95% normal-approximation half-widths.
    pub ci_sq: Vec<f64>,
    pub ci_a: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CouplingReport {
    pub stats: CouplingStats,
    /// Envelope verdict: mean_sq <= e^{2Kt}|dz0|^2 + CI at all snapshots.
    pub envelope_ok: bool,
    pub envelope_failures: usize,
    pub k_bound: f64,
    /// Pathwise A-form verdict beyond radius R.
    pub aform_ok: bool,
    pub aform_checked: u64,
    pub aform_violations: u64,
    /// Coefficient of the documented O(dt) bias allowance
    /// tol = coeff * dt * |dz|^2 in the pathwise check.
    pub aform_bias_coeff: f64,
}

struct PairAccum {
    sq: Vec<f64>,
    sq2: Vec<f64>,
    af: Vec<f64>,
    af2: Vec<f64>,
    checked: u64,
    violations: u64,
}

/// Evolve `cfg.n_traj` synchronous pairs from (z0, z0p) with shared noise
/// per pair. K is the one-sided Lipschitz bound used in the envelope;
/// the certificate supplies (A, R, eps_contract) for the pathwise check.
pub fn couple_synchronous(
    model: &ModelSpec,
    z0: &PhasePoint,
    z0p: &PhasePoint,
    cfg: &SdeRunConfig,
    cert: &ContractionCertificate,
    k_bound: f64,
    n_snapshots: usize,
) -> Result<CouplingReport> {
    cfg.validate()?;
    if z0.dim() != model.dim || z0p.dim() != model.dim || cert.dim() != model.dim {
        return Err(Error::DimensionMismatch(
            "couple_synchronous: z0/z0p/certificate dimensions must match the model".into(),
        ));
    }
    let d = model.dim;
    let n_steps = cfg.n_steps();
    let snaps = n_snapshots.max(1).min(n_steps.max(1));
    let snap_steps: Vec<usize> = (1..=snaps).map(|s| s * n_steps / snaps).collect();
    let bounds = model.drift_bounds()?;
    let bias_coeff = 4.0 * cert.a_opnorm * (1.0 + bounds.grad_b_sup).powi(2);

    let a = &cert.a;
    let a_form = |dz: &[f64], a: &DMatrix<f64>| -> f64 {
        let mut q = 0.0;
        for r in 0..2 * d {
            let mut acc = 0.0;
            for c in 0..2 * d {
                acc += a[(r, c)] * dz[c];
            }
            q += dz[r] * acc;
        }
        q
    };

    let accum: Vec<PairAccum> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|traj| -> Result<PairAccum> {
            let mut sim = TrajectorySim::new(model, cfg.dt, cfg.integrator)?;
            let mut rng = TrajectorySim::rng_for(cfg.seed, traj as u64);
            let mut x1 = z0.x.as_slice().to_vec();
            let mut v1 = z0.v.as_slice().to_vec();
            let mut x2 = z0p.x.as_slice().to_vec();
            let mut v2 = z0p.v.as_slice().to_vec();
            let mut acc = PairAccum {
                sq: vec![0.0; snap_steps.len()],
                sq2: vec![0.0; snap_steps.len()],
                af: vec![0.0; snap_steps.len()],
                af2: vec![0.0; snap_steps.len()],
                checked: 0,
                violations: 0,
            };
            let mut dz = vec![0.0; 2 * d];
            let gap = |x1: &[f64], v1: &[f64], x2: &[f64], v2: &[f64], dz: &mut [f64]| {
                for k in 0..d {
                    dz[k] = x1[k] - x2[k];
                    dz[d + k] = v1[k] - v2[k];
                }
            };
            gap(&x1, &v1, &x2, &v2, &mut dz);
            let mut q_prev = a_form(&dz, a);
            let mut dist_prev: f64 = dz.iter().map(|t| t * t).sum();
            let mut si = 0usize;
            for step in 1..=n_steps {
                sim.draw_noise(&mut rng);
                sim.advance(&mut x1, &mut v1)?;
                sim.advance(&mut x2, &mut v2)?;
                gap(&x1, &v1, &x2, &v2, &mut dz);
                let dist: f64 = dz.iter().map(|t| t * t).sum();
                let q = a_form(&dz, a);
                // pathwise check: beyond R the A-form decays at rate
                // 2 eps |dz|^2, up to the discretization bias
                if dist_prev.sqrt() >= cert.r {
                    acc.checked += 1;
                    let lhs = (q - q_prev) / cfg.dt;
                    let tol = bias_coeff * cfg.dt * dist_prev;
                    if lhs > -2.0 * cert.eps_contract * dist_prev + tol {
                        acc.violations += 1;
                    }
                }
                q_prev = q;
                dist_prev = dist;
                if si < snap_steps.len() && step == snap_steps[si] {
                    acc.sq[si] += dist;
                    acc.sq2[si] += dist * dist;
                    acc.af[si] += q;
                    acc.af2[si] += q * q;
                    si += 1;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = cfg.n_traj as f64;
    let mut stats = CouplingStats {
        times: snap_steps.iter().map(|&s| s as f64 * cfg.dt).collect(),
        mean_sq_dist: vec![0.0; snap_steps.len()],
        mean_a_dist: vec![0.0; snap_steps.len()],
        ci_sq: vec![0.0; snap_steps.len()],
        ci_a: vec![0.0; snap_steps.len()],
    };
    let mut checked = 0u64;
    let mut violations = 0u64;
    // sequential reduce in trajectory order keeps results identical across
    // thread counts
    for si in 0..snap_steps.len() {
        let (mut s1, mut s2, mut a1, mut a2) = (0.0, 0.0, 0.0, 0.0);
        for acc in &accum {
            s1 += acc.sq[si];
            s2 += acc.sq2[si];
            a1 += acc.af[si];
            a2 += acc.af2[si];
        }
        let mean_sq = s1 / n;
        let mean_a = a1 / n;
        stats.mean_sq_dist[si] = mean_sq;
        stats.mean_a_dist[si] = mean_a;
        if cfg.n_traj > 1 {
            let var_sq = (s2 / n - mean_sq * mean_sq).max(0.0) * n / (n - 1.0);
            let var_a = (a2 / n - mean_a * mean_a).max(0.0) * n / (n - 1.0);
            stats.ci_sq[si] = 1.96 * (var_sq / n).sqrt();
            stats.ci_a[si] = 1.96 * (var_a / n).sqrt();
        }
    }
    for acc in &accum {
        checked += acc.checked;
        violations += acc.violations;
    }

    let dz0: f64 = z0
        .stacked()
        .iter()
        .zip(z0p.stacked().iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let mut envelope_failures = 0usize;
    for si in 0..stats.times.len() {
        let envelope = (2.0 * k_bound * stats.times[si]).exp() * dz0;
        if stats.mean_sq_dist[si] > envelope + stats.ci_sq[si] + 1e-12 * (1.0 + dz0) {
            envelope_failures += 1;
        }
    }
    Ok(CouplingReport {
        stats,
        envelope_ok: envelope_failures == 0,
        envelope_failures,
        k_bound,
        aform_ok: violations == 0,
        aform_checked: checked,
        aform_violations: violations,
        aform_bias_coeff: bias_coeff,
    })
}
