//! Dense small-matrix kernels.
//!
//! Everything here works on row-major `f64` storage and is sized for the
//! handful-of-dimensions problems the rest of the crate produces. The
//! symmetric eigensolver is a cyclic Jacobi sweep; norms are Euclidean.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("expected {expected} entries, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("spectral radius iteration did not converge within {0} squarings")]
    NoConvergence(usize),
}

/// A dense real matrix with finite entries.
#[derive(Clone, PartialEq, Serialize)]
#[serde(into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::BadLength {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged or non-finite
    /// input; use [`Matrix::new`] for fallible construction.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.as_ref().len(), c, "ragged rows");
            data.extend_from_slice(row.as_ref());
        }
        Self::new(r, c, data).expect("finite entries")
    }

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
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        self.data
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `Mᵀ S M` for a symmetric `S`, returned as a symmetric matrix.
    pub fn congruence(&self, s: &SymMatrix) -> SymMatrix {
        let sm = s.as_matrix().matmul(self);
        SymMatrix::from_matrix(&self.transpose().matmul(&sm))
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Symmetric matrix. Only the upper triangle of any input is read, so
/// `get(i, j) == get(j, i)` holds exactly.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    inner: Matrix,
}

impl SymMatrix {
    pub fn from_matrix(m: &Matrix) -> Self {
        assert!(m.is_square(), "symmetric matrix must be square");
        let n = m.rows;
        let mut inner = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = m.get(i, j);
                inner.set(i, j, v);
                inner.set(j, i, v);
            }
        }
        Self { inner }
    }

    /// Builds from the packed upper triangle, row by row.
    pub fn from_upper(n: usize, upper: &[f64]) -> Self {
        assert_eq!(upper.len(), n * (n + 1) / 2);
        let mut inner = Matrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                inner.set(i, j, upper[k]);
                inner.set(j, i, upper[k]);
                k += 1;
            }
        }
        Self { inner }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: Matrix::identity(n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: Matrix::zeros(n, n),
        }
    }

    pub fn order(&self) -> usize {
        self.inner.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            inner: self.inner.scale(alpha),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        Self {
            inner: &self.inner + &other.inner,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        Self {
            inner: &self.inner - &other.inner,
        }
    }

    pub fn add_diag(&self, c: f64) -> SymMatrix {
        let mut out = self.clone();
        let n = self.order();
        for i in 0..n {
            let v = out.inner.get(i, i) + c;
            out.inner.set(i, i, v);
        }
        out
    }

    pub fn to_upper(&self) -> Vec<f64> {
        let n = self.order();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.order()).map(|i| self.get(i, i)).sum()
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.inner.fmt(f)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(s: SymMatrix) -> Self {
        s.inner.to_rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = String;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(format!("symmetric matrix must be square ({n} rows)"));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        let m = Matrix::new(n, n, data).map_err(|e| e.to_string())?;
        Ok(SymMatrix::from_matrix(&m))
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// All eigenvalues of `s`, ascending, by cyclic Jacobi rotations.
pub fn sym_eigenvalues(s: &SymMatrix) -> Vec<f64> {
    let n = s.order();
    let mut a = s.inner.data.clone();
    let scale = s.inner.frobenius_norm();
    if scale == 0.0 {
        return vec![0.0; n];
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

pub fn sym_eig_min(s: &SymMatrix) -> f64 {
    if s.order() == 1 {
        return s.get(0, 0);
    }
    sym_eigenvalues(s)[0]
}

pub fn sym_eig_max(s: &SymMatrix) -> f64 {
    if s.order() == 1 {
        return s.get(0, 0);
    }
    *sym_eigenvalues(s).last().expect("order >= 1")
}

/// Lower-triangular Cholesky factor, or `None` if a pivot is not positive.
pub fn cholesky(s: &SymMatrix) -> Option<Matrix> {
    let n = s.order();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = s.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in (j + 1)..n {
            let mut v = s.get(i, j);
            for k in 0..j {
                v -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, v / djj);
        }
    }
    Some(l)
}

/// `true` iff the smallest eigenvalue of `s` exceeds `margin`.
pub fn is_pd(s: &SymMatrix, margin: f64) -> bool {
    if margin == 0.0 {
        // A clean factorization with comfortably sized pivots settles it;
        // otherwise defer to the eigenvalues.
        if let Some(l) = cholesky(s) {
            let n = s.order();
            let min_pivot = (0..n).map(|i| l.get(i, i)).fold(f64::INFINITY, f64::min);
            let scale = s.as_matrix().frobenius_norm();
            if min_pivot * min_pivot > 1e-10 * scale {
                return true;
            }
        }
    }
    sym_eig_min(s) > margin
}

/// Largest singular value.
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.rows == 0 || a.cols == 0 {
        return 0.0;
    }
    let gram = if a.rows >= a.cols {
        a.transpose().matmul(a)
    } else {
        a.matmul(&a.transpose())
    };
    sym_eig_max(&SymMatrix::from_matrix(&gram)).max(0.0).sqrt()
}

const GELFAND_MAX_SQUARINGS: usize = 64;

/// Largest eigenvalue modulus of a square matrix.
///
/// Orders 1 and 2 are closed form. Larger orders use Gelfand's formula on
/// repeated squares `‖A^(2^k)‖^(1/2^k)`, renormalizing at each step so the
/// powers never overflow; the estimate approaches the radius from above.
pub fn spectral_radius(a: &Matrix) -> Result<f64, NumericsError> {
    assert!(a.is_square(), "spectral radius of a non-square matrix");
    match a.rows {
        0 => Ok(0.0),
        1 => Ok(a.get(0, 0).abs()),
        2 => Ok(radius_2x2(a)),
        _ => gelfand_radius(a),
    }
}

fn radius_2x2(a: &Matrix) -> f64 {
    let tr = a.get(0, 0) + a.get(1, 1);
    let det = a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(1, 0);
    let half = 0.5 * tr;
    let disc = half * half - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        // Stable pairing: the larger root first, the other from det / root.
        let big = half + half.signum() * r;
        let big = if half == 0.0 { r } else { big };
        let small = if big != 0.0 { det / big } else { 0.0 };
        big.abs().max(small.abs())
    } else {
        det.max(0.0).sqrt()
    }
}

fn gelfand_radius(a: &Matrix) -> Result<f64, NumericsError> {
    let norm = spectral_norm(a);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let mut b = a.scale(1.0 / norm);
    // log of the accumulated scale of A^(2^k) relative to b.
    let mut log_scale = norm.ln();
    let mut power = 1.0_f64;
    let mut prev = norm;
    for k in 0..GELFAND_MAX_SQUARINGS {
        b = b.matmul(&b);
        power *= 2.0;
        log_scale *= 2.0;
        let nb = spectral_norm(&b);
        if nb == 0.0 {
            return Ok(0.0);
        }
        log_scale += nb.ln();
        b = b.scale(1.0 / nb);
        let est = (log_scale / power).exp();
        if k > 0 && (prev - est).abs() <= 1e-8 * est {
            return Ok(est);
        }
        prev = est;
    }
    Err(NumericsError::NoConvergence(GELFAND_MAX_SQUARINGS))
}

/// Inverse of a positive-definite matrix through its Cholesky factor.
pub fn inverse_pd(q: &SymMatrix) -> Result<SymMatrix, NumericsError> {
    let n = q.order();
    let l = cholesky(q).ok_or(NumericsError::NotPositiveDefinite)?;
    // Solve L Lᵀ X = I column by column.
    let mut inv = Matrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for c in 0..n {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[c] = 1.0;
        let x = cholesky_solve(&l, &col);
        for r in 0..n {
            inv.set(r, c, x[r]);
        }
    }
    // Average the two triangles rather than dropping one.
    let sym = &inv + &inv.transpose();
    Ok(SymMatrix::from_matrix(&sym.scale(0.5)))
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor `L`.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = b.to_vec();
    for i in 0..n {
        let mut v = y[i];
        for k in 0..i {
            v -= l.get(i, k) * y[k];
        }
        y[i] = v / l.get(i, i);
    }
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in (i + 1)..n {
            v -= l.get(k, i) * y[k];
        }
        y[i] = v / l.get(i, i);
    }
    y
}

/// Cholesky factorization of a dense row-major SPD system matrix of order
/// `n`, in place (lower triangle). Returns `false` on a nonpositive pivot.
pub(crate) fn dense_cholesky_in_place(h: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = h[j * n + j];
        for k in 0..j {
            d -= h[j * n + k] * h[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let djj = d.sqrt();
        h[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut v = h[i * n + j];
            for k in 0..j {
                v -= h[i * n + k] * h[j * n + k];
            }
            h[i * n + j] = v / djj;
        }
    }
    true
}

/// Solve with a factor produced by [`dense_cholesky_in_place`].
pub(crate) fn dense_cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let v = b[i] - row.iter().zip(&b[..i]).map(|(a, c)| a * c).sum::<f64>();
        b[i] = v / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in (i + 1)..n {
            v -= l[k * n + i] * b[k];
        }
        b[i] = v / l[i * n + i];
    }
}

pub fn vec_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eig_min_examples() {
        assert!(close(sym_eig_min(&SymMatrix::identity(3)), 1.0, 1e-12));
        let d = SymMatrix::from_matrix(&Matrix::diag(&[2.0, -5.0]));
        assert!(close(sym_eig_min(&d), -5.0, 1e-12));
        let s = SymMatrix::from_matrix(&Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]));
        assert!(close(sym_eig_min(&s), 1.0, 1e-12));
        assert!(close(sym_eig_max(&s), 3.0, 1e-12));
    }

    #[test]
    fn eig_of_zero_matrix() {
        assert_eq!(sym_eigenvalues(&SymMatrix::zeros(3)), vec![0.0; 3]);
    }

    #[test]
    fn from_matrix_reads_upper_triangle() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [7.0, 3.0]]);
        let s = SymMatrix::from_matrix(&m);
        assert_eq!(s.get(1, 0), 2.0);
        assert_eq!(s.get(0, 1), s.get(1, 0));
    }

    #[test]
    fn pd_examples() {
        assert!(is_pd(&SymMatrix::identity(2), 0.0));
        assert!(!is_pd(&SymMatrix::zeros(2), 0.0));
        let s = SymMatrix::from_matrix(&Matrix::from_rows(&[[1.0, 0.999], [0.999, 1.0]]));
        assert!(is_pd(&s, 1e-4));
        assert!(!is_pd(&s, 2e-3));
        let indefinite = SymMatrix::from_matrix(&Matrix::diag(&[1.0, -1e-12]));
        assert!(!is_pd(&indefinite, 0.0));
    }

    #[test]
    fn norm_examples() {
        assert!(close(spectral_norm(&Matrix::identity(4)), 1.0, 1e-12));
        assert!(close(spectral_norm(&Matrix::diag(&[3.0, -4.0])), 4.0, 1e-12));
        let wide = Matrix::from_rows(&[[3.0, 4.0]]);
        assert!(close(spectral_norm(&wide), 5.0, 1e-12));
    }

    #[test]
    fn radius_examples() {
        // Closed form: tr = 0.85, det = -0.2098, so ρ = 0.425 + sqrt(0.425² + 0.2098).
        let a2 = Matrix::from_rows(&[[1.13, 0.13], [-0.82, -0.28]]);
        let expected = 0.425 + (0.425f64 * 0.425 + 0.2098).sqrt();
        assert!((spectral_radius(&a2).unwrap() - expected).abs() <= 1e-12);
        assert!((expected - 1.049_84).abs() < 1e-5);
        let (s, c) = (30f64.to_radians().sin(), 30f64.to_radians().cos());
        let rot = Matrix::from_rows(&[[c, -s], [s, c]]).scale(0.9);
        assert!(close(spectral_radius(&rot).unwrap(), 0.9, 1e-12));
        assert!(close(spectral_radius(&Matrix::diag(&[0.2, 0.7])).unwrap(), 0.7, 1e-12));
        let nil = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(spectral_radius(&nil).unwrap(), 0.0);
    }

    #[test]
    fn gelfand_path_on_3x3() {
        let d = Matrix::diag(&[0.2, -0.7, 0.5]);
        assert!(close(spectral_radius(&d).unwrap(), 0.7, 1e-7));
        // Rotation block plus a scalar: radius max(0.9, 0.4).
        let (s, c) = (0.3f64.sin(), 0.3f64.cos());
        let m = Matrix::from_rows(&[
            [0.9 * c, -0.9 * s, 0.0],
            [0.9 * s, 0.9 * c, 0.0],
            [0.0, 0.0, 0.4],
        ]);
        assert!(close(spectral_radius(&m).unwrap(), 0.9, 1e-7));
        let jordan = Matrix::from_rows(&[[0.5, 1.0, 0.0], [0.0, 0.5, 1.0], [0.0, 0.0, 0.5]]);
        assert!(close(spectral_radius(&jordan).unwrap(), 0.5, 1e-6));
        assert_eq!(spectral_radius(&Matrix::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn inverse_examples() {
        let id = inverse_pd(&SymMatrix::identity(3)).unwrap();
        assert!(id.as_matrix().max_abs_diff(&Matrix::identity(3)) < 1e-15);
        let d = inverse_pd(&SymMatrix::from_matrix(&Matrix::diag(&[2.0, 4.0]))).unwrap();
        assert!(d.as_matrix().max_abs_diff(&Matrix::diag(&[0.5, 0.25])) < 1e-15);
        let s = SymMatrix::from_matrix(&Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]));
        let expected = Matrix::from_rows(&[[2.0, -1.0], [-1.0, 2.0]]).scale(1.0 / 3.0);
        assert!(inverse_pd(&s).unwrap().as_matrix().max_abs_diff(&expected) < 1e-14);
        assert_eq!(
            inverse_pd(&SymMatrix::from_matrix(&Matrix::diag(&[1.0, -1.0]))),
            Err(NumericsError::NotPositiveDefinite)
        );
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(NumericsError::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0]),
            Err(NumericsError::BadLength { .. })
        ));
    }

    #[test]
    fn dense_solver_matches_small_cholesky() {
        let h = vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let mut f = h.clone();
        assert!(dense_cholesky_in_place(&mut f, 3));
        let mut b = vec![1.0, -2.0, 0.5];
        dense_cholesky_solve(&f, 3, &mut b);
        let hm = Matrix::new(3, 3, h).unwrap();
        let back = hm.matvec(&b);
        for (got, want) in back.iter().zip([1.0, -2.0, 0.5]) {
            assert!(close(*got, want, 1e-12));
        }
    }
}
