//! Crank-Nicolson (theta = 1/2) time stepping for densities and observables.
//!
//! The implicit matrix is time-independent, so it is band-factored once and
//! reused for every step. With the exact-transpose operator pair this
//! conserves mass on the density side and the mu-mean on the observable side
//! to solver roundoff per step.

use crate::error::{Error, Result};
use crate::grid::{
    boundary_mass, gradient, mu_inner, mu_mean, FieldKind, GridField,
};
use crate::linalg::{BandedLu, Csr};
use crate::pde::steady::BOUNDARY_MASS_LIMIT;
use crate::pde::DiscreteGenerator;

/// One Crank-Nicolson stepper: f <- (I - dt/2 Op)^{-1} (I + dt/2 Op) f.
pub struct CnStepper {
    lu: BandedLu,
    op: Csr,
    pub dt: f64,
    scratch: Vec<f64>,
}

impl CnStepper {
    pub fn new(op: &Csr, dt: f64) -> Result<Self> {
        // factor (I - dt/2 Op) = -dt/2 (Op - 2/dt I): factor Op + shift with
        // shift = -2/dt then rescale at solve time; simpler: build the
        // shifted CSR directly
        let n = op.n;
        let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(op.vals.len() + n);
        for r in 0..n {
            for k in op.row_ptr[r]..op.row_ptr[r + 1] {
                trip.push((r, op.col_idx[k], -0.5 * dt * op.vals[k]));
            }
            trip.push((r, r, 1.0));
        }
        let minus = Csr::from_triplets(n, &trip);
        let lu = BandedLu::factor(&minus, 0.0)?;
        Ok(CnStepper { lu, op: op.clone(), dt, scratch: vec![0.0; n] })
    }

    pub fn step(&mut self, f: &mut Vec<f64>) {
        self.op.apply_identity_plus_scaled(0.5 * self.dt, f, &mut self.scratch);
        self.lu.solve(&mut self.scratch);
        std::mem::swap(f, &mut self.scratch);
    }
}

fn resolve_steps(t_end: f64, dt: f64, dt_cfl: f64) -> Result<(usize, f64)> {
    if t_end < 0.0 || dt <= 0.0 {
        return Err(Error::InvalidInput("evolve: need T >= 0 and dt > 0".into()));
    }
    if dt > dt_cfl * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, dt_max: dt_cfl });
    }
    if t_end == 0.0 {
        return Ok((0, dt));
    }
    let n = (t_end / dt).ceil().max(1.0) as usize;
    Ok((n, t_end / n as f64))
}

fn snapshot_steps(n_steps: usize, n_snapshots: usize) -> Vec<usize> {
    if n_steps == 0 || n_snapshots == 0 {
        return vec![0];
    }
    let k = n_snapshots.min(n_steps);
    let mut out: Vec<usize> = (0..=k).map(|s| s * n_steps / k).collect();
    out.dedup();
    out
}

#[derive(Debug, Clone)]
pub struct DensityEvolution {
    pub dt: f64,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<GridField>,
    /// ||h_t - 1||_mu at every step (index 0 = initial datum).
    pub step_times: Vec<f64>,
    pub h_norm: Vec<f64>,
    pub mass_drift_max: f64,
    pub boundary_mass_max: f64,
}

/// Evolve a density with CN stepping; `mu` is the steady state used for the
/// relative-density norms.
pub fn evolve_density(
    gen: &DiscreteGenerator,
    f0: &GridField,
    mu: &GridField,
    t_end: f64,
    dt: f64,
    n_snapshots: usize,
) -> Result<DensityEvolution> {
    let grid = &gen.grid;
    let w = grid.cell_weight();
    if f0.values.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidInput("evolve_density: f0 must be nonnegative".into()));
    }
    let mass0: f64 = f0.values.iter().sum::<f64>() * w;
    if (mass0 - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "evolve_density: f0 mass {mass0} is not 1"
        )));
    }
    let (n_steps, dt) = resolve_steps(t_end, dt, gen.meta.dt_cfl)?;
    let snaps = snapshot_steps(n_steps, n_snapshots);

    let mut stepper = CnStepper::new(&gen.den, dt)?;
    let mut f = f0.values.clone();
    let h_of = |f: &[f64]| -> f64 {
        let h: Vec<f64> = f.iter().zip(&mu.values).map(|(a, m)| a / m - 1.0).collect();
        mu_inner(&h, &h, mu, grid).sqrt()
    };

    let mut out = DensityEvolution {
        dt,
        snapshot_times: Vec::new(),
        snapshots: Vec::new(),
        step_times: Vec::with_capacity(n_steps + 1),
        h_norm: Vec::with_capacity(n_steps + 1),
        mass_drift_max: 0.0,
        boundary_mass_max: 0.0,
    };
    let record = |k: usize, f: &[f64], out: &mut DensityEvolution| {
        out.step_times.push(k as f64 * dt);
        out.h_norm.push(h_of(f));
    };
    record(0, &f, &mut out);
    let bm0 = boundary_mass(f0, grid);
    out.boundary_mass_max = bm0;
    if bm0 > BOUNDARY_MASS_LIMIT {
        return Err(Error::GridTooSmall(format!(
            "initial density carries boundary-layer mass {bm0:.3e}"
        )));
    }
    if snaps.contains(&0) {
        out.snapshot_times.push(0.0);
        out.snapshots.push(f0.clone());
    }
    for k in 1..=n_steps {
        stepper.step(&mut f);
        let mass: f64 = f.iter().sum::<f64>() * w;
        out.mass_drift_max = out.mass_drift_max.max((mass - 1.0).abs());
        record(k, &f, &mut out);
        if snaps.contains(&k) {
            let field = GridField::new(f.clone(), FieldKind::Density);
            let bm = boundary_mass(&field, grid);
            out.boundary_mass_max = out.boundary_mass_max.max(bm);
            if bm > BOUNDARY_MASS_LIMIT {
                return Err(Error::GridTooSmall(format!(
                    "density reached boundary-layer mass {bm:.3e} at t = {}",
                    k as f64 * dt
                )));
            }
            out.snapshot_times.push(k as f64 * dt);
            out.snapshots.push(field);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ObservableEvolution {
    pub dt: f64,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<GridField>,
    pub step_times: Vec<f64>,
    /// ||g_t||^2_mu per step.
    pub norm_sq: Vec<f64>,
    /// ||d_x g||^2, ||d_v g||^2 and the cross term <d_x g, d_v g>_mu.
    pub gradx_sq: Vec<f64>,
    pub gradv_sq: Vec<f64>,
    pub cross_xv: Vec<f64>,
    /// Per-step dissipation-identity defect
    /// |Delta||g||^2/dt + 2 sigma^2 ||d_v g_mid||^2| evaluated at the CN
    /// midpoint field.
    pub diss_defect: Vec<f64>,
    /// max_t |mean_mu(g_t) - mean_mu(g_0)|.
    pub mean_drift_max: f64,
}

pub fn evolve_observable(
    gen: &DiscreteGenerator,
    g0: &GridField,
    mu: &GridField,
    t_end: f64,
    dt: f64,
    n_snapshots: usize,
) -> Result<ObservableEvolution> {
    let grid = &gen.grid;
    let (n_steps, dt) = resolve_steps(t_end, dt, gen.meta.dt_cfl)?;
    let snaps = snapshot_steps(n_steps, n_snapshots);
    let s2 = gen.sigma * gen.sigma;

    let mut stepper = CnStepper::new(&gen.obs, dt)?;
    let mut g = g0.values.clone();
    let mean0 = mu_mean(&g, mu, grid);

    let mut out = ObservableEvolution {
        dt,
        snapshot_times: Vec::new(),
        snapshots: Vec::new(),
        step_times: Vec::with_capacity(n_steps + 1),
        norm_sq: Vec::with_capacity(n_steps + 1),
        gradx_sq: Vec::with_capacity(n_steps + 1),
        gradv_sq: Vec::with_capacity(n_steps + 1),
        cross_xv: Vec::with_capacity(n_steps + 1),
        diss_defect: Vec::with_capacity(n_steps),
        mean_drift_max: 0.0,
    };
    let record = |k: usize, g: &[f64], out: &mut ObservableEvolution| {
        let (gx, gv) = gradient(g, grid);
        out.step_times.push(k as f64 * dt);
        out.norm_sq.push(mu_inner(g, g, mu, grid));
        out.gradx_sq.push(mu_inner(&gx, &gx, mu, grid));
        out.gradv_sq.push(mu_inner(&gv, &gv, mu, grid));
        out.cross_xv.push(mu_inner(&gx, &gv, mu, grid));
    };
    record(0, &g, &mut out);
    if snaps.contains(&0) {
        out.snapshot_times.push(0.0);
        out.snapshots.push(g0.clone());
    }
    let mut mid = vec![0.0; g.len()];
    for k in 1..=n_steps {
        let prev_norm_sq = *out.norm_sq.last().unwrap();
        let gold = g.clone();
        stepper.step(&mut g);
        for i in 0..g.len() {
            mid[i] = 0.5 * (g[i] + gold[i]);
        }
        record(k, &g, &mut out);
        let (_, gv_mid) = gradient(&mid, grid);
        let gv_mid_sq = mu_inner(&gv_mid, &gv_mid, mu, grid);
        let lhs = (out.norm_sq[k] - prev_norm_sq) / dt;
        out.diss_defect.push((lhs + 2.0 * s2 * gv_mid_sq).abs());
        let mean = mu_mean(&g, mu, grid);
        out.mean_drift_max = out.mean_drift_max.max((mean - mean0).abs());
        if snaps.contains(&k) {
            out.snapshot_times.push(k as f64 * dt);
            out.snapshots.push(GridField::new(g.clone(), FieldKind::Observable));
        }
    }
    Ok(out)
}
