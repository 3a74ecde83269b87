//! Decay certification: the stepwise differential inequality on the
//! modified norm and the min(t, t^3) envelope.

use crate::error::{Error, Result};
use crate::hypo::schedule::{alpha, alpha_sq_integral, modified_norm_from_moments};
use crate::pde::ObservableEvolution;

/// Time series of the modified norm and its ingredients along an observable
/// evolution, with the certified rate r(t) = eps a(t)^2 / (2C + 4 eps).
#[derive(Debug, Clone)]
pub struct ModifiedNormTrace {
    pub times: Vec<f64>,
    pub n_t: Vec<f64>,
    pub norm_sq: Vec<f64>,
    pub gradx_sq: Vec<f64>,
    pub gradv_sq: Vec<f64>,
    pub rate_certified: Vec<f64>,
    pub eps_norm: f64,
    pub c_poincare: f64,
}

impl ModifiedNormTrace {
    pub fn from_observable_evolution(evo: &ObservableEvolution, eps_norm: f64, c: f64) -> Self {
        let n_t: Vec<f64> = (0..evo.step_times.len())
            .map(|k| {
                modified_norm_from_moments(
                    evo.norm_sq[k],
                    evo.gradx_sq[k],
                    evo.gradv_sq[k],
                    evo.cross_xv[k],
                    evo.step_times[k],
                    eps_norm,
                )
            })
            .collect();
        let rate = evo
            .step_times
            .iter()
            .map(|&t| {
                let a = alpha(t);
                eps_norm * a * a / (2.0 * c + 4.0 * eps_norm)
            })
            .collect();
        ModifiedNormTrace {
            times: evo.step_times.clone(),
            n_t,
            norm_sq: evo.norm_sq.clone(),
            gradx_sq: evo.gradx_sq.clone(),
            gradv_sq: evo.gradv_sq.clone(),
            rate_certified: rate,
            eps_norm,
            c_poincare: c,
        }
    }

    /// N_0 = ||g_0||^2 (D_0 = 0) and N_t >= ||g_t||^2.
    pub fn check_invariants(&self) -> Result<()> {
        if self.n_t.is_empty() {
            return Err(Error::InvalidInput("trace: empty".into()));
        }
        if self.n_t[0] != self.norm_sq[0] {
            return Err(Error::DataQuality(format!(
                "trace: N_0 = {} differs from ||g_0||^2 = {}",
                self.n_t[0], self.norm_sq[0]
            )));
        }
        for k in 0..self.n_t.len() {
            if !(self.n_t[k].is_finite() && self.n_t[k] >= self.norm_sq[k] - 1e-12 * self.n_t[0]) {
                return Err(Error::DataQuality(format!(
                    "trace: N_t < ||g_t||^2 at step {k}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub slack: f64,
    pub n_steps: usize,
    pub n_violations: usize,
    /// (step index, lhs, rhs) of the first violated step inequality.
    pub first_violation: Option<(usize, f64, f64)>,
    /// Worst value of lhs - rhs, scaled by N_0 (negative = margin).
    pub worst_excess_rel: f64,
    pub integrated_ok: bool,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.n_violations == 0 && self.integrated_ok
    }
}

/// Check, at every trace step,
///   (N_{t+dt} - N_t)/dt <= -r(t) N_t + slack N_0 (dt + h)
/// and the integrated envelope N_t <= exp(-int_0^t r) N_0 (1 + slack).
pub fn verify_decay(trace: &ModifiedNormTrace, slack: f64, h_scale: f64) -> Result<DecayReport> {
    trace.check_invariants()?;
    let n = trace.times.len();
    if n < 2 {
        return Err(Error::InvalidInput("verify_decay: need at least two steps".into()));
    }
    let dt = trace.times[1] - trace.times[0];
    let n0 = trace.n_t[0];
    let mut report = DecayReport {
        slack,
        n_steps: n - 1,
        n_violations: 0,
        first_violation: None,
        worst_excess_rel: f64::NEG_INFINITY,
        integrated_ok: true,
    };
    let tol = slack * n0 * (dt + h_scale);
    for k in 0..n - 1 {
        let lhs = (trace.n_t[k + 1] - trace.n_t[k]) / dt;
        let rhs = -trace.rate_certified[k] * trace.n_t[k] + tol;
        let excess = (lhs - rhs) / n0.max(f64::MIN_POSITIVE);
        report.worst_excess_rel = report.worst_excess_rel.max(excess);
        if lhs > rhs {
            report.n_violations += 1;
            if report.first_violation.is_none() {
                report.first_violation = Some((k, lhs, rhs));
            }
        }
    }
    let rate_scale = trace.eps_norm / (2.0 * trace.c_poincare + 4.0 * trace.eps_norm);
    for k in 0..n {
        let envelope = (-rate_scale * alpha_sq_integral(trace.times[k])).exp() * n0 * (1.0 + slack);
        if trace.n_t[k] > envelope {
            report.integrated_ok = false;
            break;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct EnvelopeReport {
    /// c = eps / (40 (2C + 4 eps)) certified from the integral bound.
    pub c_certified: f64,
    /// Least-squares decay rate fitted on the last third of the run.
    pub c_emp: f64,
    pub envelope_ok: bool,
    pub n_envelope_violations: usize,
    /// The numerical confirmation of int_0^t alpha^2 >= min(t, t^3)/40.
    pub integral_bound_ok: bool,
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        self.envelope_ok && self.integral_bound_ok && self.c_certified > 0.0
    }
}

/// Confirm int_0^t alpha^2(s) ds >= min(t, t^3)/40 on a dense grid of
/// `n_points` in [0, 100]. Run before any decay report is accepted.
pub fn check_integral_envelope_bound(n_points: usize) -> bool {
    (0..=n_points).all(|k| {
        let t = 100.0 * k as f64 / n_points as f64;
        alpha_sq_integral(t) >= t.min(t * t * t) / 40.0 - 1e-15
    })
}

/// Verify the pointwise envelope norm_t <= e^{-c min(t,t^3)} norm_0 on a
/// norm trace (observable ||g_t|| or density ||h_t - 1||), and fit the
/// empirical tail rate. `monotone_tol` is the absolute slack allowed on
/// monotonicity; larger increases are a data-quality error since the norm's
/// derivative is an explicit nonpositive dissipation.
pub fn envelope_check(
    times: &[f64],
    norms: &[f64],
    eps_norm: f64,
    c_poincare: f64,
    monotone_tol: f64,
) -> Result<EnvelopeReport> {
    if times.len() != norms.len() || times.len() < 4 {
        return Err(Error::InvalidInput("envelope_check: need >= 4 samples".into()));
    }
    let integral_bound_ok = check_integral_envelope_bound(10_000);
    for k in 1..norms.len() {
        if norms[k] > norms[k - 1] + monotone_tol {
            return Err(Error::DataQuality(format!(
                "norm trace increases by {:.3e} at t = {} (tolerance {monotone_tol:.1e}); \
                 contradicts the dissipation identity",
                norms[k] - norms[k - 1],
                times[k]
            )));
        }
    }
    let c_certified = eps_norm / (40.0 * (2.0 * c_poincare + 4.0 * eps_norm));
    let n0 = norms[0];
    let mut violations = 0usize;
    for k in 0..times.len() {
        let t = times[k];
        let envelope = (-c_certified * t.min(t * t * t)).exp() * n0 * (1.0 + 1e-12);
        if norms[k] > envelope {
            violations += 1;
        }
    }
    // tail fit on the last third: ln norm ~ a - c_emp t
    let t_end = *times.last().unwrap();
    let t_cut = t_end * (2.0 / 3.0);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(norms)
        .filter(|(&t, &v)| t >= t_cut && v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    let c_emp = if pts.len() >= 3 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        -(n * sxy - sx * sy) / (n * sxx - sx * sx)
    } else {
        f64::NAN
    };
    Ok(EnvelopeReport {
        c_certified,
        c_emp,
        envelope_ok: violations == 0,
        n_envelope_violations: violations,
        integral_bound_ok,
    })
}
