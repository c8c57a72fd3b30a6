//! Dense symmetric linear algebra for small dimensions.
//!
//! Everything here works on [`SquareMatrix`], a row-major `d x d` buffer.
//! The routines cover what the estimators need and nothing more: Cholesky
//! factorisation, SPD inversion through the factor, and the spectral norm
//! of a symmetric matrix via a cyclic Jacobi eigensolve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when a matrix is required to be symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Pivots at or below this fraction of the largest diagonal entry are
/// treated as a positive-definiteness failure.
pub const PIVOT_TOL: f64 = 1e-14;

const JACOBI_MAX_SWEEPS: usize = 100;

/// A dense `dim x dim` real matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major entries. Fails on a wrong entry count
    /// or any non-finite entry.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, x.len());
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.data[i * d + j] * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.asymmetry() <= rel_tol * self.max_abs()
    }

    /// Returns `(M + Mᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let mut s = self.clone();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        s
    }

    fn ensure_symmetric(&self) -> Result<()> {
        if self.is_symmetric(SYMMETRY_TOL) {
            Ok(())
        } else {
            Err(Error::NonSymmetric {
                asymmetry: self.asymmetry(),
            })
        }
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl TryFrom<Vec<Vec<f64>>> for SquareMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<SquareMatrix> for Vec<Vec<f64>> {
    fn from(m: SquareMatrix) -> Self {
        m.rows()
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = sigma`.
pub fn cholesky(sigma: &SquareMatrix) -> Result<SquareMatrix> {
    sigma.ensure_symmetric()?;
    let d = sigma.dim();
    let scale = (0..d).fold(0.0_f64, |m, i| m.max(sigma[(i, i)]));
    let threshold = PIVOT_TOL * scale;
    let mut l = SquareMatrix::zeros(d);
    for j in 0..d {
        let mut pivot = sigma[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > threshold) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..d {
            let mut acc = sigma[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive definite matrix, via its Cholesky factor.
pub fn spd_inverse(sigma: &SquareMatrix) -> Result<SquareMatrix> {
    let l = cholesky(sigma)?;
    Ok(inverse_from_cholesky(&l))
}

/// `(L Lᵀ)⁻¹` given the lower factor `L`.
pub fn inverse_from_cholesky(l: &SquareMatrix) -> SquareMatrix {
    let d = l.dim();
    // Invert L by forward substitution, then form L⁻ᵀ L⁻¹.
    let mut linv = SquareMatrix::zeros(d);
    for col in 0..d {
        for i in col..d {
            let mut acc = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                acc -= l[(i, k)] * linv[(k, col)];
            }
            linv[(i, col)] = acc / l[(i, i)];
        }
    }
    let mut inv = SquareMatrix::zeros(d);
    for i in 0..d {
        for j in 0..=i {
            let mut acc = 0.0;
            for k in i..d {
                acc += linv[(k, i)] * linv[(k, j)];
            }
            inv[(i, j)] = acc;
            inv[(j, i)] = acc;
        }
    }
    inv
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
pub fn symmetric_eigenvalues(m: &SquareMatrix) -> Result<Vec<f64>> {
    m.ensure_symmetric()?;
    let d = m.dim();
    let mut a = m.symmetrized();
    let total = a.frobenius_norm();
    if total == 0.0 {
        return Ok(vec![0.0; d]);
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }
    let mut eig: Vec<f64> = (0..d).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Ok(eig)
}

/// Operator 2-norm of a symmetric matrix: its largest absolute eigenvalue.
pub fn spectral_norm(m: &SquareMatrix) -> Result<f64> {
    let eig = symmetric_eigenvalues(m)?;
    Ok(eig.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &SquareMatrix) -> Result<f64> {
    let eig = symmetric_eigenvalues(m)?;
    Ok(*eig.last().unwrap_or(&0.0))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
