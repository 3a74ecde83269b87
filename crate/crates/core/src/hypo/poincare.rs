//! Two routes to the Poincaré constant of the steady state: the Rayleigh
//! quotient of the weighted full-gradient Dirichlet form, and the
//! semigroup-contraction constant
//! C = |sigma|_inf^2 (e^{2K t0} - 1) / (2K (1 - |P_t0 - mu|_2^2)).

use crate::error::{Error, Result};
use crate::grid::{mu_inner, GridField, PhaseGrid};
use crate::linalg::{BandedLu, Csr};
use crate::pde::{CnStepper, DiscreteGenerator};

/// Rayleigh-quotient estimate of the spectral gap lambda_1 of the
/// full-gradient Dirichlet form and C = 1/lambda_1.
#[derive(Debug, Clone)]
pub struct RayleighResult {
    pub lambda1: f64,
    pub c_rayleigh: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Edge-based weighted Dirichlet matrix
///   <g, K g> = sum_edges mu_edge (jump g / h)^2 (hx hv),
/// with arithmetic-mean edge weights. Edge-based (not centered) because the
/// centered form admits a checkerboard near-null mode.
fn dirichlet_matrix(mu: &GridField, grid: &PhaseGrid) -> Csr {
    let (nx, nv) = (grid.nx, grid.nv);
    let w = grid.cell_weight();
    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(8 * grid.n());
    let mut add_edge = |r: usize, c: usize, m: f64| {
        trip.push((r, r, m));
        trip.push((c, c, m));
        trip.push((r, c, -m));
        trip.push((c, r, -m));
    };
    for i in 0..nx {
        for j in 0..nv {
            let r = grid.idx(i, j);
            if i + 1 < nx {
                let m = 0.5 * (mu.values[r] + mu.values[grid.idx(i + 1, j)]) * w / (grid.hx * grid.hx);
                add_edge(r, grid.idx(i + 1, j), m);
            }
            if j + 1 < nv {
                let m = 0.5 * (mu.values[r] + mu.values[grid.idx(i, j + 1)]) * w / (grid.hv * grid.hv);
                add_edge(r, grid.idx(i, j + 1), m);
            }
        }
    }
    Csr::from_triplets(grid.n(), &trip)
}

/// Smallest nonzero generalized eigenvalue of K g = lambda M g (M = diag of
/// mu weights) by inverse iteration with mean-zero deflation.
pub fn poincare_rayleigh(mu: &GridField, grid: &PhaseGrid) -> Result<RayleighResult> {
    let n = grid.n();
    let w = grid.cell_weight();
    let k = dirichlet_matrix(mu, grid);
    let mw: Vec<f64> = mu.values.iter().map(|m| m * w).collect();
    let total_m: f64 = mw.iter().sum();

    // K + rho M keeps the factorization nonsingular; rho far below lambda_1
    let rho = 1e-10;
    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(n);
    for i in 0..n {
        trip.push((i, i, rho * mw[i]));
    }
    let mut shifted_trip: Vec<(usize, usize, f64)> = trip;
    for r in 0..n {
        for kk in k.row_ptr[r]..k.row_ptr[r + 1] {
            shifted_trip.push((r, k.col_idx[kk], k.vals[kk]));
        }
    }
    let shifted = Csr::from_triplets(n, &shifted_trip);
    let lu = BandedLu::factor(&shifted, 0.0)?;

    let deflate = |u: &mut Vec<f64>| {
        let mean: f64 = u.iter().zip(&mw).map(|(a, m)| a * m).sum::<f64>() / total_m;
        u.iter_mut().for_each(|x| *x -= mean);
    };
    // deterministic start with both-coordinate structure
    let mut u: Vec<f64> = (0..n)
        .map(|r| {
            let i = r / grid.nv;
            let j = r % grid.nv;
            grid.xc(i) + 0.5 * grid.vc(j) + 0.1 * (grid.xc(i) * grid.vc(j)).sin()
        })
        .collect();
    deflate(&mut u);

    let mut history = Vec::new();
    let mut lambda = f64::INFINITY;
    let mut iterations = 0;
    let mut kx = vec![0.0; n];
    for it in 1..=200 {
        let mut rhs: Vec<f64> = u.iter().zip(&mw).map(|(a, m)| a * m).collect();
        lu.solve(&mut rhs);
        u = rhs;
        deflate(&mut u);
        let norm_m = u.iter().zip(&mw).map(|(a, m)| a * a * m).sum::<f64>().sqrt();
        u.iter_mut().for_each(|x| *x /= norm_m);
        k.matvec(&u, &mut kx);
        let new_lambda: f64 = u.iter().zip(&kx).map(|(a, b)| a * b).sum();
        history.push(new_lambda);
        iterations = it;
        let done = (new_lambda - lambda).abs() <= 1e-10 * new_lambda.abs().max(1e-300);
        lambda = new_lambda;
        if done {
            break;
        }
        if it == 200 {
            return Err(Error::Solver {
                msg: "poincare_rayleigh: inverse iteration stagnated".into(),
                history,
            });
        }
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Solver {
            msg: format!("poincare_rayleigh: nonpositive lambda_1 = {lambda}"),
            history,
        });
    }
    Ok(RayleighResult { lambda1: lambda, c_rayleigh: 1.0 / lambda, iterations, history })
}

/// Rayleigh quotient of the velocity-only (carré du champ) form for a given
/// test function: sum_v-edges mu (jump/hv)^2 w / ||g - mean||^2. Vanishes for
/// any x-only function, which is exactly the no-Poincaré counterexample.
pub fn velocity_only_quotient(g: &GridField, mu: &GridField, grid: &PhaseGrid) -> f64 {
    let w = grid.cell_weight();
    let mut num = 0.0;
    for i in 0..grid.nx {
        for j in 0..grid.nv - 1 {
            let r = grid.idx(i, j);
            let c = grid.idx(i, j + 1);
            let m = 0.5 * (mu.values[r] + mu.values[c]);
            let jump = (g.values[c] - g.values[r]) / grid.hv;
            num += m * jump * jump * w;
        }
    }
    let mean: f64 = g
        .values
        .iter()
        .zip(&mu.values)
        .map(|(a, m)| a * m)
        .sum::<f64>()
        * w;
    let centered: Vec<f64> = g.values.iter().map(|x| x - mean).collect();
    let den = mu_inner(&centered, &centered, mu, grid);
    num / den
}

#[derive(Debug, Clone)]
pub struct OpnormEstimate {
    pub value: f64,
    pub t0: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// mu-weighted operator norm of Pi P_{t0} Pi by power iteration on the
/// composition with its mu-adjoint; the adjoint is realized by density-side
/// stepping of mu*g (adjoint-by-weighting), which is exact for the
/// transpose-pair discretization.
pub fn operator_norm_pt(
    gen: &DiscreteGenerator,
    mu: &GridField,
    t0: f64,
    dt: f64,
) -> Result<OpnormEstimate> {
    if t0 < 0.0 {
        return Err(Error::InvalidInput("operator_norm_pt: t0 must be >= 0".into()));
    }
    let grid = &gen.grid;
    let n = grid.n();
    let w = grid.cell_weight();
    let mw: Vec<f64> = mu.values.iter().map(|m| m * w).collect();
    let total_m: f64 = mw.iter().sum();
    if t0 == 0.0 {
        // P_0 = Id on mean-zero functions
        return Ok(OpnormEstimate { value: 1.0, t0, iterations: 0, history: vec![1.0] });
    }
    let steps = ((t0 / dt).round() as usize).max(1);
    let dt_eff = t0 / steps as f64;
    if dt_eff > gen.meta.dt_cfl * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt: dt_eff, dt_max: gen.meta.dt_cfl });
    }
    let mut obs_step = CnStepper::new(&gen.obs, dt_eff)?;
    let mut den_step = CnStepper::new(&gen.den, dt_eff)?;

    let deflate = |u: &mut Vec<f64>| {
        let mean: f64 = u.iter().zip(&mw).map(|(a, m)| a * m).sum::<f64>() / total_m;
        u.iter_mut().for_each(|x| *x -= mean);
    };
    let mu_norm2 =
        |u: &[f64]| -> f64 { u.iter().zip(&mw).map(|(a, m)| a * a * m).sum::<f64>() };

    let mut u: Vec<f64> = (0..n)
        .map(|r| {
            let i = r / grid.nv;
            let j = r % grid.nv;
            (grid.xc(i) * 0.9).sin() + 0.3 * grid.vc(j)
        })
        .collect();
    deflate(&mut u);
    let norm = mu_norm2(&u).sqrt();
    u.iter_mut().for_each(|x| *x /= norm);

    let mut history = Vec::new();
    let mut value = f64::NAN;
    let mut iterations = 0;
    for it in 1..=60 {
        // forward semigroup
        let mut fwd = u.clone();
        for _ in 0..steps {
            obs_step.step(&mut fwd);
        }
        deflate(&mut fwd);
        let lam = mu_norm2(&fwd); // ||T u||^2 with ||u|| = 1
        // adjoint: g -> den-evolve(mu g)/mu
        let mut adj: Vec<f64> = fwd.iter().zip(&mu.values).map(|(a, m)| a * m).collect();
        for _ in 0..steps {
            den_step.step(&mut adj);
        }
        let mut back: Vec<f64> = adj.iter().zip(&mu.values).map(|(a, m)| a / m).collect();
        deflate(&mut back);
        let norm = mu_norm2(&back).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Solver {
                msg: "operator_norm_pt: power iteration collapsed".into(),
                history,
            });
        }
        back.iter_mut().for_each(|x| *x /= norm);
        u = back;
        let new_value = lam.sqrt();
        history.push(new_value);
        iterations = it;
        let done = !value.is_nan() && (new_value - value).abs() <= 1e-6 * new_value.max(1e-300);
        value = new_value;
        if done {
            break;
        }
    }
    Ok(OpnormEstimate { value, t0, iterations, history })
}

/// The contraction-route Poincaré constant. The K -> 0 limit
/// (e^{2Kt0}-1)/(2K) -> t0 activates below |K| = 1e-10.
pub fn poincare_prop2(k: f64, sigma_sup: f64, t0: f64, opnorm: f64) -> Result<f64> {
    if !(opnorm >= 0.0) {
        return Err(Error::InvalidInput("poincare_prop2: opnorm must be >= 0".into()));
    }
    if opnorm >= 1.0 {
        return Err(Error::Inapplicable(format!(
            "no contraction certified at t0 = {t0}: |P_t0 - mu| = {opnorm} >= 1"
        )));
    }
    let kernel = if k.abs() < 1e-10 { t0 } else { ((2.0 * k * t0).exp() - 1.0) / (2.0 * k) };
    Ok(sigma_sup * sigma_sup * kernel / (1.0 - opnorm * opnorm))
}

/// Bundle of both Poincaré routes for one run.
#[derive(Debug, Clone)]
pub struct PoincareEstimate {
    pub lambda1: f64,
    pub c_rayleigh: f64,
    pub k_one_sided: f64,
    pub t0: f64,
    pub opnorm_pt0: f64,
    /// None when opnorm >= 1 (Prop 2 inapplicable).
    pub c_prop2: Option<f64>,
}
