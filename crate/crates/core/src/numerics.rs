//! Small dense linear algebra: row-major matrices, finite vectors, an LU
//! linear solver and a Householder QR least-squares solver.
//!
//! Everything here is sized for desk-scale problems (tens to a few hundred
//! unknowns); no blocking or sparsity.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// Relative pivot threshold for [`solve_linear`].
pub const SINGULAR_TOL: f64 = 1e-12;

/// Relative threshold on the diagonal of R, measured against the largest
/// column norm of the design matrix, used by [`least_squares`].
pub const RANK_TOL: f64 = 1e-10;

/// A dense vector whose entries are all finite.
#[derive(Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some((i, &v)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                value: v,
                location: format!("vector entry {}", i + 1),
            });
        }
        Ok(Vector(entries))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// Wraps entries already known to be finite.
    pub(crate) fn from_finite(entries: Vec<f64>) -> Self {
        debug_assert!(entries.iter().all(|v| v.is_finite()));
        Vector(entries)
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// A dense row-major matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::mismatch("matrix entries", rows * cols, data.len()));
        }
        if let Some((k, &v)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                value: v,
                location: format!(
                    "matrix entry ({}, {})",
                    k / cols.max(1) + 1,
                    k % cols.max(1) + 1
                ),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::mismatch(
                    format!("matrix row {}", i + 1),
                    cols,
                    r.len(),
                ));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    /// Matrix-vector product. Panics on a dimension mismatch.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Matrix product. Panics on a dimension mismatch.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    /// `xᵀ M x` for a square matrix.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.rows).map(|i| self.row(i)).collect();
        f.debug_struct("Matrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("data", &rows)
            .finish()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Solves `M x = b` by LU factorization with partial pivoting.
///
/// Fails with [`Error::SingularMatrix`] when a pivot falls below
/// `SINGULAR_TOL` times the largest entry magnitude of `M`.
pub fn solve_linear(m: &Matrix, b: &Vector) -> Result<Vector> {
    if !m.is_square() {
        return Err(Error::mismatch(
            "solve_linear: columns of a square matrix",
            m.rows,
            m.cols,
        ));
    }
    let n = m.rows;
    if b.dim() != n {
        return Err(Error::mismatch("solve_linear: right-hand side", n, b.dim()));
    }
    let threshold = SINGULAR_TOL * m.max_abs();
    let mut lu = m.data.clone();
    let mut x = b.0.clone();

    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, lu[i * n + k].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if pivot < threshold || pivot == 0.0 {
            return Err(Error::SingularMatrix { pivot, threshold });
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let diag = lu[k * n + k];
        for i in k + 1..n {
            let factor = lu[i * n + k] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in k + 1..n {
                lu[i * n + j] -= factor * lu[k * n + j];
            }
            lu[i * n + k] = 0.0;
            x[i] -= factor * x[k];
        }
    }
    for k in (0..n).rev() {
        let tail: f64 = (k + 1..n).map(|j| lu[k * n + j] * x[j]).sum();
        x[k] = (x[k] - tail) / lu[k * n + k];
    }
    Vector::new(x).map_err(|_| Error::SingularMatrix {
        pivot: 0.0,
        threshold,
    })
}

/// Minimizes `‖D W − Y‖_F` over `W` with a Householder QR factorization of `D`.
///
/// `D` must be `p × q` with `p ≥ q` and full column rank. The rank test
/// compares each diagonal entry of R with the largest column norm of `D`.
pub fn least_squares(d: &Matrix, y: &Matrix) -> Result<Matrix> {
    let (p, q) = (d.rows, d.cols);
    if y.rows != p {
        return Err(Error::mismatch("least_squares: rows of Y", p, y.rows));
    }
    if p < q {
        return Err(Error::RankDeficient { column: p + 1 });
    }
    let r_cols = y.cols;
    let col_scale = (0..q)
        .map(|j| (0..p).map(|i| d.get(i, j).powi(2)).sum::<f64>().sqrt())
        .fold(0.0_f64, f64::max);
    let threshold = RANK_TOL * col_scale;

    let mut a = d.data.clone();
    let mut rhs = y.data.clone();
    let mut v = vec![0.0; p];
    for k in 0..q {
        let norm = (k..p).map(|i| a[i * q + k].powi(2)).sum::<f64>().sqrt();
        if norm <= threshold || norm == 0.0 {
            return Err(Error::RankDeficient { column: k + 1 });
        }
        let alpha = if a[k * q + k] > 0.0 { -norm } else { norm };
        for i in k..p {
            v[i] = a[i * q + k];
        }
        v[k] -= alpha;
        let vnorm_sq: f64 = (k..p).map(|i| v[i] * v[i]).sum();
        if vnorm_sq > 0.0 {
            for j in k..q {
                let s: f64 = (k..p).map(|i| v[i] * a[i * q + j]).sum::<f64>() * 2.0 / vnorm_sq;
                for i in k..p {
                    a[i * q + j] -= s * v[i];
                }
            }
            for j in 0..r_cols {
                let s: f64 =
                    (k..p).map(|i| v[i] * rhs[i * r_cols + j]).sum::<f64>() * 2.0 / vnorm_sq;
                for i in k..p {
                    rhs[i * r_cols + j] -= s * v[i];
                }
            }
        }
        a[k * q + k] = alpha;
    }

    let mut w = vec![0.0; q * r_cols];
    for j in 0..r_cols {
        for k in (0..q).rev() {
            let tail: f64 = (k + 1..q).map(|l| a[k * q + l] * w[l * r_cols + j]).sum();
            w[k * r_cols + j] = (rhs[k * r_cols + j] - tail) / a[k * q + k];
        }
    }
    Matrix::new(q, r_cols, w).map_err(|_| Error::RankDeficient { column: q })
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// or `None` when a non-positive pivot appears.
pub fn cholesky(m: &Matrix) -> Option<Matrix> {
    if !m.is_square() {
        return None;
    }
    let n = m.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let s: f64 = (0..j).map(|k| l.get(j, k).powi(2)).sum();
        let d = m.get(j, j) - s;
        if d.is_nan() || d <= 0.0 {
            return None;
        }
        let ljj = d.sqrt();
        l.set(j, j, ljj);
        for i in j + 1..n {
            let s: f64 = (0..j).map(|k| l.get(i, k) * l.get(j, k)).sum();
            l.set(i, j, (m.get(i, j) - s) / ljj);
        }
    }
    Some(l)
}
