//! Banded LU factorization with partial pivoting (LAPACK dgbtf2 layout).
//!
//! The phase-space operators have bandwidth ~Nv under v-fastest ordering, so
//! a dense band factorization is the right tool for both the implicit time
//! steps and the inverse-power null-vector solves.

use crate::error::{Error, Result};
use crate::linalg::Csr;

/// LU factors of a banded matrix, column-major band storage with room for
/// pivoting fill: entry (i, j) lives at `ab[j*ldab + kl + ku + i - j]`.
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factor `a + shift*I`. Fails if a pivot is exactly zero.
    pub fn factor(a: &Csr, shift: f64) -> Result<Self> {
        let (kl, ku) = a.bandwidths();
        let n = a.n;
        let ldab = 2 * kl + ku + 1;
        let kv = kl + ku;
        let mut ab = vec![0.0; ldab * n];
        for r in 0..n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                let c = a.col_idx[k];
                ab[c * ldab + kv + r - c] += a.vals[k];
            }
        }
        if shift != 0.0 {
            for j in 0..n {
                ab[j * ldab + kv] += shift;
            }
        }
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab;
            let mut jp = 0usize;
            let mut best = ab[col + kv].abs();
            for k in 1..=km {
                let v = ab[col + kv + k].abs();
                if v > best {
                    best = v;
                    jp = k;
                }
            }
            ipiv[j] = j + jp;
            let piv = ab[col + kv + jp];
            if piv == 0.0 {
                return Err(Error::Solver {
                    msg: format!("banded LU: zero pivot at column {j}"),
                    history: vec![],
                });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let base = c * ldab + kv + j - c;
                    ab.swap(base, base + jp);
                }
            }
            if km > 0 {
                let d = ab[col + kv];
                for k in 1..=km {
                    ab[col + kv + k] /= d;
                }
                for c in (j + 1)..=ju {
                    let t = ab[c * ldab + kv + j - c];
                    if t != 0.0 {
                        for k in 1..=km {
                            ab[c * ldab + kv + j + k - c] -= ab[col + kv + k] * t;
                        }
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, ku, ldab, ab, ipiv })
    }

    /// Solve in place.
    pub fn solve(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let kv = self.kl + self.ku;
        // L: unit lower triangular, multipliers stored below the diagonal
        for j in 0..self.n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = self.kl.min(self.n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                let col = j * self.ldab;
                for k in 1..=km {
                    b[j + k] -= self.ab[col + kv + k] * bj;
                }
            }
        }
        // U: bandwidth kl+ku above the diagonal
        for j in (0..self.n).rev() {
            let col = j * self.ldab;
            b[j] /= self.ab[col + kv];
            let bj = b[j];
            if bj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    b[i] -= self.ab[col + kv + i - j] * bj;
                }
            }
        }
    }
}
