//! Discrete generator assembly on the truncated phase-space grid (d = 1).
//!
//! Default scheme ("stream-sg"): the Hamiltonian transport pair
//! v d_x - U'(x) d_v is discretized antisymmetrically from the discrete curl
//! of the stream function Theta = -(sigma^2/gamma) mu_ref evaluated at cell
//! corners (outer ring clamped to zero, which zeroes the wall fluxes), and
//! the Ornstein-Uhlenbeck part (-gamma v + F) d_v + sigma^2 d_vv uses
//! Scharfetter-Gummel two-point fluxes. This gives, exactly and by
//! construction: zero row sums (L 1 = 0), Lebesgue-transpose mass
//! conservation, stationarity of the sampled Gibbs weight in the equilibrium
//! case, and a nonpositive Dirichlet form in L^2(mu_h) for any computed
//! steady state (the transport contributions cancel pairwise), which is what
//! makes ||h_t - 1|| monotone to roundoff.
//!
//! The spec-literal first-order upwind scheme ("upwind") is kept as an
//! option; its steady-state accuracy budget against the Gaussian oracle is
//! documented in the tests (L1 error ~1e-1 at 128^2 versus ~1e-12 for the
//! default scheme).

use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::linalg::Csr;
use crate::model::{DriftFamily, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Stream-function skew transport + Scharfetter-Gummel velocity fluxes.
    StreamSg,
    /// First-order upwind transport and drift, centered diffusion.
    Upwind,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::StreamSg => "stream-sg",
            Scheme::Upwind => "upwind",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorMetadata {
    pub scheme: String,
    pub boundary: String,
    /// dt satisfying both transport and drift CFL rules with safety 0.25.
    pub dt_cfl: f64,
}

/// Observable-side operator L_h and its Lebesgue transpose for densities.
pub struct DiscreteGenerator {
    pub grid: PhaseGrid,
    pub sigma: f64,
    /// Observable-side generator (acts on functions g).
    pub obs: Csr,
    /// Density-side operator, the exact transpose of `obs`.
    pub den: Csr,
    /// Reference weight exp(-(gamma/sigma^2)(U + v^2/2)) at cell centers.
    pub mu_ref: Vec<f64>,
    pub meta: GeneratorMetadata,
    pub v_max_abs: f64,
    pub b_max_abs: f64,
}

/// Bernoulli function s / (1 - e^{-s}) of the Scharfetter-Gummel flux.
fn bernoulli(s: f64) -> f64 {
    if s.abs() < 1e-8 {
        1.0 + s / 2.0 + s * s / 12.0
    } else {
        s / (-(-s).exp_m1())
    }
}

pub fn assemble_generator(
    model: &ModelSpec,
    grid: &PhaseGrid,
    scheme: Scheme,
) -> Result<DiscreteGenerator> {
    if model.dim != 1 {
        return Err(Error::Unsupported(format!(
            "grid solver is one-dimensional (model.d = {})",
            model.dim
        )));
    }
    let scheme = match (&model.drift, scheme) {
        // the stream construction needs the (U, gamma) split
        (DriftFamily::Custom { .. }, Scheme::StreamSg) => Scheme::Upwind,
        (_, s) => s,
    };
    let (nx, nv) = (grid.nx, grid.nv);
    let n = grid.n();
    let s2 = model.sigma * model.sigma;

    let gamma = model.gamma().unwrap_or(1.0);
    let u_val: Box<dyn Fn(f64) -> f64> = match &model.drift {
        DriftFamily::Equilibrium { potential, .. } => {
            let p = potential.clone();
            Box::new(move |x| p.value_at(x))
        }
        _ => Box::new(|x| 0.5 * x * x),
    };
    let sg_drift = |x: f64, v: f64| -> f64 {
        match &model.drift {
            DriftFamily::Equilibrium { gamma, .. } => -gamma * v,
            DriftFamily::PerturbedHarmonic { gamma, perturbation } => {
                let mut f = [0.0];
                perturbation.eval(&[x], &[v], &mut f);
                -gamma * v + f[0]
            }
            DriftFamily::Custom { .. } => 0.0,
        }
    };

    let mu_ref: Vec<f64> = {
        let mut m = vec![0.0; n];
        for i in 0..nx {
            for j in 0..nv {
                let (x, v) = (grid.xc(i), grid.vc(j));
                m[grid.idx(i, j)] = (-(gamma / s2) * (u_val(x) + 0.5 * v * v)).exp();
            }
        }
        m
    };

    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(6 * n);

    match scheme {
        Scheme::StreamSg => {
            // stream function at cell corners, outer ring clamped to 0
            let mut theta = vec![0.0; (nx + 1) * (nv + 1)];
            for i in 1..nx {
                for j in 1..nv {
                    let x = grid.x_min + i as f64 * grid.hx;
                    let v = grid.v_min + j as f64 * grid.hv;
                    theta[i * (nv + 1) + j] =
                        -(s2 / gamma) * (-(gamma / s2) * (u_val(x) + 0.5 * v * v)).exp();
                }
            }
            let th = |i: usize, j: usize| theta[i * (nv + 1) + j];
            let inv2w = 1.0 / (2.0 * grid.hx * grid.hv);
            // x-edge flux between cells (i-1, j) and (i, j); wall fluxes are
            // identically zero because the clamped corner ring is constant
            let px = |i: usize, j: usize| (th(i, j + 1) - th(i, j)) * inv2w;
            // v-edge flux between cells (i, j-1) and (i, j)
            let pv = |i: usize, j: usize| -(th(i + 1, j) - th(i, j)) * inv2w;

            for i in 0..nx {
                for j in 0..nv {
                    let r = grid.idx(i, j);
                    let m = mu_ref[r];
                    let mut diag = 0.0;
                    if i + 1 < nx {
                        let p = px(i + 1, j) / m;
                        triplets.push((r, grid.idx(i + 1, j), p));
                        diag -= p;
                    }
                    if i > 0 {
                        let p = -px(i, j) / m;
                        triplets.push((r, grid.idx(i - 1, j), p));
                        diag -= p;
                    }
                    if j + 1 < nv {
                        let p = pv(i, j + 1) / m;
                        triplets.push((r, grid.idx(i, j + 1), p));
                        diag -= p;
                    }
                    if j > 0 {
                        let p = -pv(i, j) / m;
                        triplets.push((r, grid.idx(i, j - 1), p));
                        diag -= p;
                    }
                    // divergence-free fluxes make this diagonal vanish
                    // analytically; writing the negated sum keeps row sums
                    // at exact zero in floating point
                    triplets.push((r, r, diag));
                }
            }
            // Scharfetter-Gummel rates for (-gamma v + F) d_v + s2 d_vv
            for i in 0..nx {
                let x = grid.xc(i);
                for j in 0..nv {
                    let r = grid.idx(i, j);
                    if j + 1 < nv {
                        let v_face = grid.v_min + (j + 1) as f64 * grid.hv;
                        let w = sg_drift(x, v_face) * grid.hv / s2;
                        let up = s2 / (grid.hv * grid.hv) * bernoulli(w);
                        let dn = s2 / (grid.hv * grid.hv) * bernoulli(-w);
                        triplets.push((r, grid.idx(i, j + 1), up));
                        triplets.push((r, r, -up));
                        triplets.push((grid.idx(i, j + 1), r, dn));
                        triplets.push((grid.idx(i, j + 1), grid.idx(i, j + 1), -dn));
                    }
                }
            }
        }
        Scheme::Upwind => {
            let mut b_buf = [0.0];
            for i in 0..nx {
                let x = grid.xc(i);
                for j in 0..nv {
                    let v = grid.vc(j);
                    let r = grid.idx(i, j);
                    model.eval_drift_into(&[x], &[v], &mut b_buf);
                    let b = b_buf[0];
                    // transport: jump in the direction of motion
                    if v > 0.0 && i + 1 < nx {
                        let rate = v / grid.hx;
                        triplets.push((r, grid.idx(i + 1, j), rate));
                        triplets.push((r, r, -rate));
                    } else if v < 0.0 && i > 0 {
                        let rate = -v / grid.hx;
                        triplets.push((r, grid.idx(i - 1, j), rate));
                        triplets.push((r, r, -rate));
                    }
                    // drift in v
                    if b > 0.0 && j + 1 < nv {
                        let rate = b / grid.hv;
                        triplets.push((r, grid.idx(i, j + 1), rate));
                        triplets.push((r, r, -rate));
                    } else if b < 0.0 && j > 0 {
                        let rate = -b / grid.hv;
                        triplets.push((r, grid.idx(i, j - 1), rate));
                        triplets.push((r, r, -rate));
                    }
                    // centered diffusion with reflecting closure
                    let dcoef = s2 / (grid.hv * grid.hv);
                    if j + 1 < nv {
                        triplets.push((r, grid.idx(i, j + 1), dcoef));
                        triplets.push((r, r, -dcoef));
                    }
                    if j > 0 {
                        triplets.push((r, grid.idx(i, j - 1), dcoef));
                        triplets.push((r, r, -dcoef));
                    }
                }
            }
        }
    }

    let obs = Csr::from_triplets(n, &triplets);
    let den = obs.transpose();

    let v_max_abs = grid.vc(0).abs().max(grid.vc(nv - 1).abs());
    let mut b_max_abs = 0.0f64;
    let mut b_buf = [0.0];
    for i in 0..nx {
        for j in 0..nv {
            model.eval_drift_into(&[grid.xc(i)], &[grid.vc(j)], &mut b_buf);
            b_max_abs = b_max_abs.max(b_buf[0].abs());
        }
    }
    let dt_cfl = (0.25 * grid.hx / v_max_abs.max(1e-300))
        .min(0.25 * grid.hv / b_max_abs.max(1e-300));

    Ok(DiscreteGenerator {
        grid: grid.clone(),
        sigma: model.sigma,
        obs,
        den,
        mu_ref,
        meta: GeneratorMetadata {
            scheme: scheme.name().to_string(),
            boundary: "no-flux (zero wall fluxes / reflecting closure)".to_string(),
            dt_cfl,
        },
        v_max_abs,
        b_max_abs,
    })
}
