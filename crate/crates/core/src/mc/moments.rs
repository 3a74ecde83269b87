//! Ergodic averages of the steady state: time-averaged moments over many
//! trajectories with batch-means confidence intervals (one batch per
//! independent trajectory), used to cross-validate the grid steady state.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mc::integrate::{SdeRunConfig, TrajectorySim};
use crate::model::{ModelSpec, PhasePoint};

#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub value: f64,
    /// 95% half-width across trajectory batches.
    pub ci: f64,
}

impl MomentEstimate {
    /// |value| >= 3 standard errors away from zero.
    pub fn nonzero_at_3se(&self) -> bool {
        let se = self.ci / 1.96;
        self.value.abs() >= 3.0 * se
    }

    pub fn contains(&self, x: f64, extra_tol: f64) -> bool {
        (self.value - x).abs() <= self.ci + extra_tol
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MomentsReport {
    pub mean_x: MomentEstimate,
    pub mean_v: MomentEstimate,
    pub var_x: MomentEstimate,
    pub var_v: MomentEstimate,
    pub cov_xv: MomentEstimate,
    /// Quadratic cross-covariance Cov(x^2, v^2): the x-v dependence
    /// signature (plain Cov(x, v) is exactly zero in any steady state).
    pub cov_x2v2: MomentEstimate,
    pub n_traj: usize,
    pub samples_per_traj: usize,
}

/// Time-averaged moments after `burn_in`, batched by trajectory.
pub fn ergodic_moments(
    model: &ModelSpec,
    cfg: &SdeRunConfig,
    burn_in: f64,
    z0: &PhasePoint,
) -> Result<MomentsReport> {
    cfg.validate()?;
    if model.dim != 1 {
        return Err(Error::Unsupported(
            "ergodic_moments cross-validation is one-dimensional".into(),
        ));
    }
    if !(burn_in >= 0.0 && burn_in < cfg.t_end) {
        return Err(Error::InvalidInput("ergodic_moments: need 0 <= burn_in < T".into()));
    }
    if cfg.n_traj < 2 {
        return Err(Error::InvalidInput(
            "ergodic_moments: need >= 2 trajectories for batch CIs".into(),
        ));
    }
    let n_steps = cfg.n_steps();
    let burn_steps = (burn_in / cfg.dt).round() as usize;

    // per-trajectory time averages of (x, v, x^2, v^2, xv, x^2 v^2)
    let traj_means: Vec<[f64; 6]> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|traj| -> Result<[f64; 6]> {
            let mut sim = TrajectorySim::new(model, cfg.dt, cfg.integrator)?;
            let mut rng = TrajectorySim::rng_for(cfg.seed, traj as u64);
            let mut x = z0.x.as_slice().to_vec();
            let mut v = z0.v.as_slice().to_vec();
            let mut sums = [0.0f64; 6];
            let mut count = 0usize;
            for step in 1..=n_steps {
                sim.draw_noise(&mut rng);
                sim.advance(&mut x, &mut v)?;
                if step > burn_steps {
                    let (xs, vs) = (x[0], v[0]);
                    sums[0] += xs;
                    sums[1] += vs;
                    sums[2] += xs * xs;
                    sums[3] += vs * vs;
                    sums[4] += xs * vs;
                    sums[5] += xs * xs * vs * vs;
                    count += 1;
                }
            }
            let c = count.max(1) as f64;
            Ok(sums.map(|s| s / c))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = cfg.n_traj as f64;
    let estimate = |f: &dyn Fn(&[f64; 6]) -> f64| -> MomentEstimate {
        // sequential reduce in trajectory order for bit-stable output
        let vals: Vec<f64> = traj_means.iter().map(|m| f(m)).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        MomentEstimate { value: mean, ci: 1.96 * (var / n).sqrt() }
    };
    let report = MomentsReport {
        mean_x: estimate(&|m| m[0]),
        mean_v: estimate(&|m| m[1]),
        var_x: estimate(&|m| m[2] - m[0] * m[0]),
        var_v: estimate(&|m| m[3] - m[1] * m[1]),
        cov_xv: estimate(&|m| m[4] - m[0] * m[1]),
        cov_x2v2: estimate(&|m| m[5] - m[2] * m[3]),
        n_traj: cfg.n_traj,
        samples_per_traj: n_steps - burn_steps,
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::integrate::Integrator;
    use crate::model::Perturbation;

    #[test]
    fn gibbs_moments_equilibrium() {
        // unit-variance Gibbs: Var x = Var v = sigma^2/gamma = 1
        let model = ModelSpec::equilibrium(1, 1.0, 1.0, 1.0);
        let cfg = SdeRunConfig {
            dt: 0.01,
            t_end: 80.0,
            n_traj: 32,
            seed: 5,
            integrator: Integrator::SplittingOab,
        };
        let z0 = PhasePoint::new(vec![0.0], vec![0.0]);
        let rep = ergodic_moments(&model, &cfg, 8.0, &z0).unwrap();
        assert!((rep.var_x.value - 1.0).abs() < 0.08, "{:?}", rep.var_x);
        assert!((rep.var_v.value - 1.0).abs() < 0.08, "{:?}", rep.var_v);
        assert!(rep.cov_xv.value.abs() < 0.05);
    }

    #[test]
    fn gibbs_moments_scaled() {
        // sigma = 0.5, gamma = 2: Var = sigma^2/gamma = 0.125
        let model = ModelSpec::equilibrium(1, 0.5, 2.0, 1.0);
        let cfg = SdeRunConfig {
            dt: 0.01,
            t_end: 60.0,
            n_traj: 32,
            seed: 6,
            integrator: Integrator::SplittingOab,
        };
        let z0 = PhasePoint::new(vec![0.0], vec![0.0]);
        let rep = ergodic_moments(&model, &cfg, 6.0, &z0).unwrap();
        assert!((rep.var_x.value - 0.125).abs() < 0.0125, "{:?}", rep.var_x);
        assert!((rep.var_v.value - 0.125).abs() < 0.0125, "{:?}", rep.var_v);
    }

    #[test]
    fn batch_ci_shrinks_with_more_trajectories() {
        let model = ModelSpec::equilibrium(1, 1.0, 1.0, 1.0);
        let z0 = PhasePoint::new(vec![0.0], vec![0.0]);
        let mk = |n_traj| SdeRunConfig {
            dt: 0.02,
            t_end: 20.0,
            n_traj,
            seed: 7,
            integrator: Integrator::EulerMaruyama,
        };
        let small = ergodic_moments(&model, &mk(8), 2.0, &z0).unwrap();
        let large = ergodic_moments(&model, &mk(128), 2.0, &z0).unwrap();
        // half-widths shrink like n^{-1/2}: factor 4 expected, allow [2, 8]
        let ratio = small.var_x.ci / large.var_x.ci;
        assert!(ratio > 2.0 && ratio < 8.0, "ratio = {ratio}");
    }
}
