//! Minimal dense linear algebra over `f64`.
//!
//! Matrices are stored row-major: entry `(i, j)` of an `r x c` matrix lives at
//! `data[i * c + j]`. The kernel provides exactly what the solver and the KKT
//! oracle need: a Cholesky factorization for symmetric positive-definite
//! blocks and an unpivoted LDL^T factorization for symmetric quasi-definite
//! saddle systems. Dimensions are desk-scale throughout; there are no sparse
//! formats.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};
use thiserror::Error;

/// Pivots with absolute value below this are treated as zero in LDL^T.
pub const ZERO_PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("matrix is not positive definite: pivot {index} = {value:e}")]
    NotPositiveDefinite { index: usize, value: f64 },
    #[error("zero pivot at index {index}: |d| = {value:e}")]
    ZeroPivot { index: usize, value: f64 },
    #[error("pivot {index} violates the declared sign pattern")]
    PivotSignViolation { index: usize },
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from rows; panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
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

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `(A + A^T) / 2`; callers apply this to symmetric accumulations to
    /// control floating-point drift.
    pub fn symmetrized(&self) -> Matrix {
        assert!(self.is_square(), "symmetrized requires a square matrix");
        let mut s = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                s[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        s
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = 1.0 + self.max_abs();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Matrix {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        Matrix::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn add_scaled_identity(&mut self, lambda: f64) {
        assert!(self.is_square());
        for i in 0..self.rows {
            self[(i, i)] += lambda;
        }
    }

    /// `A^T v` without forming the transpose.
    pub fn t_mulv(&self, v: &Vector) -> Vector {
        assert_eq!(self.rows, v.len(), "t_mulv dimension mismatch");
        let mut out = Vector::zeros(self.cols);
        for i in 0..self.rows {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for j in 0..self.cols {
                out[j] += self[(i, j)] * vi;
            }
        }
        out
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn col(&self, j: usize) -> Vector {
        Vector::from_fn(self.rows, |i| self[(i, j)])
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Mul<&Vector> for &Matrix {
    type Output = Vector;
    fn mul(self, v: &Vector) -> Vector {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        let mut out = Vector::zeros(self.rows);
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;
    fn mul(self, a: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * a).collect(),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self * -1.0
    }
}

/// Dense vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn zeros(n: usize) -> Self {
        Self { data: vec![0.0; n] }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> f64) -> Self {
        Self {
            data: (0..n).map(&mut f).collect(),
        }
    }

    pub fn filled(n: usize, value: f64) -> Self {
        Self {
            data: vec![value; n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn dot(&self, rhs: &Vector) -> f64 {
        assert_eq!(self.len(), rhs.len());
        self.data.iter().zip(&rhs.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn norm2(&self) -> f64 {
        self.norm2_sq().sqrt()
    }

    pub fn norm2_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self += a * v`.
    pub fn axpy(&mut self, a: f64, v: &Vector) {
        assert_eq!(self.len(), v.len());
        for (x, d) in self.data.iter_mut().zip(&v.data) {
            *x += a * d;
        }
    }

    pub fn segment(&self, start: usize, len: usize) -> Vector {
        Vector::from_vec(self.data[start..start + len].to_vec())
    }

    pub fn set_segment(&mut self, start: usize, v: &Vector) {
        self.data[start..start + v.len()].copy_from_slice(&v.data);
    }

    pub fn concat(parts: &[&Vector]) -> Vector {
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Vector::from_vec(data)
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        assert_eq!(self.len(), rhs.len());
        Vector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        assert_eq!(self.len(), rhs.len());
        Vector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, a: f64) -> Vector {
        Vector {
            data: self.data.iter().map(|x| x * a).collect(),
        }
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self * -1.0
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: Matrix,
}

impl CholeskyFactor {
    /// Factors a symmetric positive-definite matrix. Only the lower triangle
    /// of `a` is read.
    pub fn factor(a: &Matrix) -> Result<Self, DenseError> {
        assert!(a.is_square(), "Cholesky requires a square matrix");
        debug_assert!(a.is_symmetric(1e-12), "Cholesky input not symmetric");
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(DenseError::NotPositiveDefinite { index: j, value: d });
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    pub fn solve(&self, b: &Vector) -> Result<Vector, DenseError> {
        let n = self.dim();
        if b.len() != n {
            return Err(DenseError::DimensionMismatch {
                op: "cholesky solve",
                expected: n,
                got: b.len(),
            });
        }
        let mut x = b.clone();
        // L w = b
        for i in 0..n {
            let mut acc = x[i];
            for k in 0..i {
                acc -= self.l[(i, k)] * x[k];
            }
            x[i] = acc / self.l[(i, i)];
        }
        // L^T x = w
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in (i + 1)..n {
                acc -= self.l[(k, i)] * x[k];
            }
            x[i] = acc / self.l[(i, i)];
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix, DenseError> {
        let n = self.dim();
        if b.rows() != n {
            return Err(DenseError::DimensionMismatch {
                op: "cholesky solve_matrix",
                expected: n,
                got: b.rows(),
            });
        }
        let mut out = Matrix::zeros(n, b.cols());
        for j in 0..b.cols() {
            let xj = self.solve(&b.col(j))?;
            for i in 0..n {
                out[(i, j)] = xj[i];
            }
        }
        Ok(out)
    }
}

/// Unpivoted LDL^T factor of a symmetric quasi-definite matrix: `K = L D L^T`
/// with `L` unit lower-triangular and `D` diagonal. The sign pattern records
/// which rows are expected to produce positive (+1) or negative (-1) pivots.
#[derive(Debug, Clone)]
pub struct QuasiDefFactor {
    l: Matrix,
    d: Vec<f64>,
    signs: Vec<i8>,
}

impl QuasiDefFactor {
    /// Factors without pivoting; valid for quasi-definite `K` (positive
    /// definite primal block, negative definite dual Schur complement).
    /// Fails with `ZeroPivot` on pivots below [`ZERO_PIVOT_TOL`] and with
    /// `PivotSignViolation` when a pivot disagrees with the declared pattern.
    pub fn factor(k: &Matrix, signs: &[i8]) -> Result<Self, DenseError> {
        assert!(k.is_square(), "LDL^T requires a square matrix");
        let n = k.rows();
        if signs.len() != n {
            return Err(DenseError::DimensionMismatch {
                op: "qdldl factor",
                expected: n,
                got: signs.len(),
            });
        }
        debug_assert!(k.is_symmetric(1e-11), "LDL^T input not symmetric");
        let mut l = Matrix::identity(n);
        let mut d = vec![0.0; n];
        for j in 0..n {
            let mut dj = k[(j, j)];
            for t in 0..j {
                dj -= l[(j, t)] * l[(j, t)] * d[t];
            }
            if dj.abs() < ZERO_PIVOT_TOL || !dj.is_finite() {
                return Err(DenseError::ZeroPivot {
                    index: j,
                    value: dj.abs(),
                });
            }
            if (dj > 0.0) != (signs[j] > 0) {
                return Err(DenseError::PivotSignViolation { index: j });
            }
            d[j] = dj;
            for i in (j + 1)..n {
                let mut s = k[(i, j)];
                for t in 0..j {
                    s -= l[(i, t)] * l[(j, t)] * d[t];
                }
                l[(i, j)] = s / dj;
            }
        }
        Ok(Self {
            l,
            d,
            signs: signs.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn unit_lower(&self) -> &Matrix {
        &self.l
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn solve(&self, b: &Vector) -> Result<Vector, DenseError> {
        let n = self.dim();
        if b.len() != n {
            return Err(DenseError::DimensionMismatch {
                op: "qdldl solve",
                expected: n,
                got: b.len(),
            });
        }
        let mut x = b.clone();
        for i in 0..n {
            let mut acc = x[i];
            for k in 0..i {
                acc -= self.l[(i, k)] * x[k];
            }
            x[i] = acc;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in (i + 1)..n {
                acc -= self.l[(k, i)] * x[k];
            }
            x[i] = acc;
        }
        Ok(x)
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
/// Intended for validation and tests, not hot paths.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    assert!(a.is_square());
    let n = a.rows();
    if n == 0 {
        return Vec::new();
    }
    let mut m = a.symmetrized();
    let scale = 1.0 + m.norm_fro();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let sign = if theta < 0.0 { -1.0 } else { 1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}
