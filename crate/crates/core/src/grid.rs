//! Truncated phase-space rectangle and cell-centered scalar fields.

use crate::error::{Error, Result};

pub const DEFAULT_MAX_CELLS: usize = 1 << 21;

/// Cell-centered discretization of [x_min, x_max] x [v_min, v_max].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub nx: usize,
    pub nv: usize,
    pub hx: f64,
    pub hv: f64,
}

impl PhaseGrid {
    pub fn new(
        x_min: f64,
        x_max: f64,
        v_min: f64,
        v_max: f64,
        nx: usize,
        nv: usize,
        max_cells: usize,
    ) -> Result<Self> {
        if !(x_max > x_min && v_max > v_min) {
            return Err(Error::InvalidInput("grid: empty rectangle".into()));
        }
        if nx == 0 || nv == 0 {
            return Err(Error::InvalidInput("grid: cell counts must be positive".into()));
        }
        if nx * nv > max_cells {
            return Err(Error::InvalidInput(format!(
                "grid: {} cells exceeds the configured maximum {max_cells}",
                nx * nv
            )));
        }
        Ok(PhaseGrid {
            x_min,
            x_max,
            v_min,
            v_max,
            nx,
            nv,
            hx: (x_max - x_min) / nx as f64,
            hv: (v_max - v_min) / nv as f64,
        })
    }

    /// Symmetric box [-hwx, hwx] x [-hwv, hwv].
    pub fn centered(hwx: f64, hwv: f64, nx: usize, nv: usize) -> Result<Self> {
        Self::new(-hwx, hwx, -hwv, hwv, nx, nv, DEFAULT_MAX_CELLS)
    }

    pub fn n(&self) -> usize {
        self.nx * self.nv
    }

    /// Cell center coordinates.
    pub fn xc(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.hx
    }

    pub fn vc(&self, j: usize) -> f64 {
        self.v_min + (j as f64 + 0.5) * self.hv
    }

    /// v-fastest linear index.
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    /// Lebesgue weight of one cell.
    pub fn cell_weight(&self) -> f64 {
        self.hx * self.hv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Density,
    Observable,
    GradientComponent,
}

/// Scalar field on the cell centers.
#[derive(Debug, Clone)]
pub struct GridField {
    pub values: Vec<f64>,
    pub kind: FieldKind,
}

impl GridField {
    pub fn new(values: Vec<f64>, kind: FieldKind) -> Self {
        assert!(values.iter().all(|v| v.is_finite()), "grid field: entries must be finite");
        GridField { values, kind }
    }

    pub fn constant(grid: &PhaseGrid, value: f64, kind: FieldKind) -> Self {
        GridField { values: vec![value; grid.n()], kind }
    }

    pub fn from_fn(grid: &PhaseGrid, kind: FieldKind, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.n()];
        for i in 0..grid.nx {
            for j in 0..grid.nv {
                values[grid.idx(i, j)] = f(grid.xc(i), grid.vc(j));
            }
        }
        GridField::new(values, kind)
    }

    /// Normalize a density to unit mass.
    pub fn normalize_mass(&mut self, grid: &PhaseGrid) {
        let mass: f64 = self.values.iter().sum::<f64>() * grid.cell_weight();
        assert!(mass > 0.0, "normalize_mass: nonpositive total mass");
        for v in &mut self.values {
            *v /= mass;
        }
    }
}

fn check_positive_density(mu: &GridField) {
    assert!(
        mu.values.iter().all(|&m| m > 0.0),
        "contract violation: steady-state weight must be positive everywhere"
    );
}

/// L2(mu) norm: sqrt(sum field^2 mu hx hv).
pub fn mu_norm(field: &[f64], mu: &GridField, grid: &PhaseGrid) -> f64 {
    mu_inner(field, field, mu, grid).sqrt()
}

/// Weighted inner product <f, g>_mu.
pub fn mu_inner(f: &[f64], g: &[f64], mu: &GridField, grid: &PhaseGrid) -> f64 {
    check_positive_density(mu);
    let w = grid.cell_weight();
    f.iter().zip(g).zip(&mu.values).map(|((a, b), m)| a * b * m).sum::<f64>() * w
}

/// Mean under mu (mu is assumed unit-mass).
pub fn mu_mean(field: &[f64], mu: &GridField, grid: &PhaseGrid) -> f64 {
    check_positive_density(mu);
    let w = grid.cell_weight();
    field.iter().zip(&mu.values).map(|(a, m)| a * m).sum::<f64>() * w
}

/// Pointwise relative density h = f / mu.
pub fn relative_density(f: &GridField, mu: &GridField) -> GridField {
    check_positive_density(mu);
    assert_eq!(f.values.len(), mu.values.len());
    let values = f.values.iter().zip(&mu.values).map(|(a, m)| a / m).collect();
    GridField::new(values, FieldKind::Observable)
}

/// Centered differences, one-sided at the boundary. Returns (d/dx, d/dv).
pub fn gradient(field: &[f64], grid: &PhaseGrid) -> (Vec<f64>, Vec<f64>) {
    let (nx, nv) = (grid.nx, grid.nv);
    assert_eq!(field.len(), nx * nv);
    let mut gx = vec![0.0; nx * nv];
    let mut gv = vec![0.0; nx * nv];
    for i in 0..nx {
        for j in 0..nv {
            let k = grid.idx(i, j);
            gx[k] = if i == 0 {
                (field[grid.idx(1, j)] - field[k]) / grid.hx
            } else if i == nx - 1 {
                (field[k] - field[grid.idx(nx - 2, j)]) / grid.hx
            } else {
                (field[grid.idx(i + 1, j)] - field[grid.idx(i - 1, j)]) / (2.0 * grid.hx)
            };
            gv[k] = if j == 0 {
                (field[grid.idx(i, 1)] - field[k]) / grid.hv
            } else if j == nv - 1 {
                (field[k] - field[grid.idx(i, nv - 2)]) / grid.hv
            } else {
                (field[grid.idx(i, j + 1)] - field[grid.idx(i, j - 1)]) / (2.0 * grid.hv)
            };
        }
    }
    (gx, gv)
}

/// First and second moments of a density, plus the quadratic
/// cross-covariance Cov(x^2, v^2) used as the non-equilibrium dependence
/// signature (the plain Cov(x, v) vanishes for every steady state of the
/// kinetic equation since E_mu[L(x^2/2)] = E_mu[x v] = 0).
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_v: f64,
    pub var_x: f64,
    pub var_v: f64,
    pub cov_xv: f64,
    pub cov_x2v2: f64,
}

pub fn density_moments(f: &GridField, grid: &PhaseGrid) -> Moments {
    let w = grid.cell_weight();
    let mut m = [0.0f64; 7]; // x, v, x2, v2, xv, x2v2, mass
    for i in 0..grid.nx {
        let x = grid.xc(i);
        for j in 0..grid.nv {
            let v = grid.vc(j);
            let p = f.values[grid.idx(i, j)] * w;
            m[0] += x * p;
            m[1] += v * p;
            m[2] += x * x * p;
            m[3] += v * v * p;
            m[4] += x * v * p;
            m[5] += x * x * v * v * p;
            m[6] += p;
        }
    }
    let mass = m[6];
    let (mx, mv) = (m[0] / mass, m[1] / mass);
    let ex2 = m[2] / mass;
    let ev2 = m[3] / mass;
    Moments {
        mean_x: mx,
        mean_v: mv,
        var_x: ex2 - mx * mx,
        var_v: ev2 - mv * mv,
        cov_xv: m[4] / mass - mx * mv,
        cov_x2v2: m[5] / mass - ex2 * ev2,
    }
}

/// Mass sitting in the outermost cell layer; the post-hoc detector for a
/// too-small truncation box.
pub fn boundary_mass(f: &GridField, grid: &PhaseGrid) -> f64 {
    let w = grid.cell_weight();
    let mut total = 0.0;
    for i in 0..grid.nx {
        for j in 0..grid.nv {
            if i == 0 || i == grid.nx - 1 || j == 0 || j == grid.nv - 1 {
                total += f.values[grid.idx(i, j)] * w;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_mu(grid: &PhaseGrid) -> GridField {
        let mut mu = GridField::constant(grid, 1.0, FieldKind::Density);
        mu.normalize_mass(grid);
        mu
    }

    #[test]
    fn grid_spacing_and_centers() {
        let g = PhaseGrid::centered(6.0, 6.0, 128, 128).unwrap();
        assert!((g.hx - 12.0 / 128.0).abs() < 1e-15);
        assert!((g.xc(0) - (-6.0 + g.hx / 2.0)).abs() < 1e-15);
        assert!((g.vc(127) - (6.0 - g.hv / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_too_many_cells() {
        let r = PhaseGrid::new(-1.0, 1.0, -1.0, 1.0, 4096, 4096, 1 << 20);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn mu_norm_of_one_is_one() {
        let g = PhaseGrid::centered(2.0, 2.0, 16, 16).unwrap();
        let mu = unit_mu(&g);
        let one = vec![1.0; g.n()];
        assert!((mu_norm(&one, &mu, &g) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn relative_density_identity() {
        let g = PhaseGrid::centered(2.0, 2.0, 8, 8).unwrap();
        let mu = GridField::from_fn(&g, FieldKind::Density, |x, v| (-(x * x + v * v)).exp());
        let h = relative_density(&mu, &mu);
        assert!(h.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn gradient_exact_on_affine_fields() {
        let g = PhaseGrid::centered(3.0, 3.0, 24, 24).unwrap();
        let f = GridField::from_fn(&g, FieldKind::Observable, |x, v| x + 2.0 * v);
        let (gx, gv) = gradient(&f.values, &g);
        for i in 1..g.nx - 1 {
            for j in 1..g.nv - 1 {
                let k = g.idx(i, j);
                assert!((gx[k] - 1.0).abs() < 1e-12);
                assert!((gv[k] - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    #[should_panic(expected = "positive everywhere")]
    fn nonpositive_mu_is_a_contract_violation() {
        let g = PhaseGrid::centered(1.0, 1.0, 4, 4).unwrap();
        let mut mu = GridField::constant(&g, 1.0, FieldKind::Density);
        mu.values[3] = 0.0;
        let one = vec![1.0; g.n()];
        let _ = mu_norm(&one, &mu, &g);
    }

    #[test]
    fn moments_of_product_gaussian() {
        let g = PhaseGrid::centered(8.0, 8.0, 200, 200).unwrap();
        let f = GridField::from_fn(&g, FieldKind::Density, |x, v| {
            (-(x * x / 2.0 + v * v / 2.0)).exp()
        });
        let m = density_moments(&f, &g);
        assert!(m.mean_x.abs() < 1e-10 && m.mean_v.abs() < 1e-10);
        assert!((m.var_x - 1.0).abs() < 1e-6);
        assert!((m.var_v - 1.0).abs() < 1e-6);
        assert!(m.cov_xv.abs() < 1e-10);
        assert!(m.cov_x2v2.abs() < 1e-8);
    }
}
