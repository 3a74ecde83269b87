//! Steady state by shifted inverse power iteration on the density-side
//! operator.

use crate::error::{Error, Result};
use crate::grid::{boundary_mass, FieldKind, GridField};
use crate::linalg::BandedLu;
use crate::pde::DiscreteGenerator;

/// Mass allowed in the outermost cell layer before the truncation box is
/// declared too small.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-4;

/// Nonpositive cells are tolerated (and floored) only below this relative
/// magnitude and below 1% of all cells; anything larger means the grid does
/// not resolve the steady state.
const NEG_TOL_REL: f64 = 1e-8;
const FLOOR_REL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub mu: GridField,
    /// ||L^T mu|| / ||mu|| before the positivity floor was applied.
    pub residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// Number of cells floored to restore strict positivity.
    pub floored_cells: usize,
    /// Most negative raw cell value (relative to the max), for the record.
    pub min_rel_raw: f64,
}

/// Compute the unit-mass positive null vector of the density operator.
/// The operator plus rho*Id (rho = 1e-12 ||op||) is factored once and the
/// iteration reuses the factorization.
pub fn steady_state(gen: &DiscreteGenerator, tol: f64) -> Result<SteadyState> {
    let n = gen.grid.n();
    let w = gen.grid.cell_weight();
    let rho = 1e-12 * gen.den.inf_norm();
    let lu = BandedLu::factor(&gen.den, rho)?;

    // the reference weight is an excellent starting guess for the default
    // scheme (exact in the equilibrium case)
    let mut f: Vec<f64> = gen.mu_ref.clone();
    let mass: f64 = f.iter().sum::<f64>() * w;
    f.iter_mut().for_each(|x| *x /= mass);

    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iters = 0;
    let mut resid_vec = vec![0.0; n];
    let max_iter = 50;
    for it in 1..=max_iter {
        lu.solve(&mut f);
        let mass: f64 = f.iter().sum::<f64>() * w;
        if !(mass.is_finite() && mass != 0.0) {
            return Err(Error::Solver {
                msg: "steady state: inverse iteration produced a degenerate mass".into(),
                history,
            });
        }
        f.iter_mut().for_each(|x| *x /= mass);
        gen.den.matvec(&f, &mut resid_vec);
        let fnorm = f.iter().map(|t| t * t).sum::<f64>().sqrt();
        residual = resid_vec.iter().map(|t| t * t).sum::<f64>().sqrt() / fnorm;
        history.push(residual);
        iters = it;
        if residual <= tol {
            break;
        }
        // stagnation: no meaningful progress over two iterations
        if it >= 3 && history[it - 3] < 1.5 * residual {
            break;
        }
    }
    if residual > tol {
        return Err(Error::Solver {
            msg: format!(
                "steady state: residual {residual:.3e} above tol {tol:.3e} after {iters} iterations"
            ),
            history,
        });
    }

    let max_val = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_val = f.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_rel_raw = min_val / max_val;
    let mut floored = 0usize;
    if min_val <= 0.0 {
        let bad: usize = f.iter().filter(|&&x| x <= 0.0).count();
        if (-min_val) > NEG_TOL_REL * max_val || bad > n / 100 {
            return Err(Error::GridTooSmall(format!(
                "steady state has {bad} nonpositive cells (worst {:.3e} of peak); \
                 enlarge the truncation box or refine the grid",
                min_rel_raw
            )));
        }
        let floor = FLOOR_REL * max_val;
        for x in f.iter_mut() {
            if *x <= 0.0 {
                *x = floor;
                floored += 1;
            }
        }
        let mass: f64 = f.iter().sum::<f64>() * w;
        f.iter_mut().for_each(|x| *x /= mass);
    }

    let mu = GridField::new(f, FieldKind::Density);
    let bm = boundary_mass(&mu, &gen.grid);
    if bm > BOUNDARY_MASS_LIMIT {
        return Err(Error::GridTooSmall(format!(
            "steady state carries mass {bm:.3e} in the boundary layer (limit {BOUNDARY_MASS_LIMIT:.0e})"
        )));
    }
    Ok(SteadyState { mu, residual, iterations: iters, residual_history: history, floored_cells: floored, min_rel_raw })
}
