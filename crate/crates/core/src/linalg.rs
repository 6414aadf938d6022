//! Dense symmetric matrices and the exact rank-one inverse update.
//!
//! Every Newton-type method in this crate keeps the *inverse* of its running
//! curvature estimate and refreshes it one rank-one term at a time with the
//! Sherman-Morrison identity
//!
//! ```text
//! (A + c v vᵀ)⁻¹ = A⁻¹ − c / (1 + c vᵀA⁻¹v) · (A⁻¹v)(A⁻¹v)ᵀ
//! ```
//!
//! which costs O(d²) instead of the O(d³) of a fresh inversion.

use crate::error::LinalgError;

/// Denominator / pivot magnitude below which an update or inversion is refused.
pub const DENOM_TOL: f64 = 1e-12;

/// Real symmetric `dim × dim` matrix stored densely in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major entries, symmetrizing as `(M + Mᵀ)/2`.
    ///
    /// Panics if `data.len() != dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * dim, "expected {dim}x{dim} entries");
        let mut m = SymMatrix { dim, data };
        m.symmetrize();
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), v)).collect()
    }

    /// Quadratic form `vᵀ M v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(&self.mul_vec(v), v)
    }

    /// Dense product `self · other` (not necessarily symmetric, returned row-major).
    pub fn mul_mat(&self, other: &SymMatrix) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = &mut out[i * d..(i + 1) * d];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Adds `c · v vᵀ` in place.
    pub fn add_outer(&mut self, v: &[f64], c: f64) {
        let d = self.dim;
        for i in 0..d {
            let ci = c * v[i];
            let row = &mut self.data[i * d..(i + 1) * d];
            for (m, &vj) in row.iter_mut().zip(v) {
                *m += ci * vj;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// Replaces the matrix by `(M + Mᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (self.data[i * d + j] + self.data[j * d + i]);
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F / ‖other‖_F`.
    pub fn rel_frobenius_diff(&self, other: &SymMatrix) -> f64 {
        let diff: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        diff / other.frobenius_norm()
    }

    /// Sherman-Morrison update in place: `self ← (self⁻¹ + c v vᵀ)⁻¹`.
    ///
    /// `self` must hold the inverse of the matrix being updated. On error the
    /// matrix is left untouched.
    pub fn rank_one_inverse_update(&mut self, v: &[f64], c: f64) -> Result<(), LinalgError> {
        if v.len() != self.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        if c == 0.0 {
            return Ok(());
        }
        let u = self.mul_vec(v);
        let denom = 1.0 + c * dot(&u, v);
        if !(denom > DENOM_TOL) {
            return Err(LinalgError::DegenerateUpdate { denom });
        }
        self.add_outer(&u, -c / denom);
        self.symmetrize();
        Ok(())
    }
}

/// Returns `(inv⁻¹ + c v vᵀ)⁻¹` given `inv`.
pub fn rank_one_inverse_update(inv: &SymMatrix, v: &[f64], c: f64) -> Result<SymMatrix, LinalgError> {
    let mut out = inv.clone();
    out.rank_one_inverse_update(v, c)?;
    Ok(out)
}

/// Gauss-Jordan inversion with partial pivoting.
pub fn dense_inverse(m: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    let d = m.dim;
    let w = 2 * d;
    // augmented [m | I]
    let mut a = vec![0.0; d * w];
    for i in 0..d {
        a[i * w..i * w + d].copy_from_slice(m.row(i));
        a[i * w + d + i] = 1.0;
    }
    for col in 0..d {
        let (piv, piv_abs) = (col..d)
            .map(|r| (r, a[r * w + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(piv_abs > DENOM_TOL) {
            return Err(LinalgError::SingularMatrix { pivot: piv_abs });
        }
        if piv != col {
            for k in 0..w {
                a.swap(col * w + k, piv * w + k);
            }
        }
        let p = a[col * w + col];
        for k in 0..w {
            a[col * w + k] /= p;
        }
        for r in 0..d {
            if r == col {
                continue;
            }
            let f = a[r * w + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..w {
                a[r * w + k] -= f * a[col * w + k];
            }
        }
    }
    let mut data = vec![0.0; d * d];
    for i in 0..d {
        data[i * d..(i + 1) * d].copy_from_slice(&a[i * w + d..(i + 1) * w]);
    }
    Ok(SymMatrix::from_row_major(d, data))
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
