//! Dense row-major matrices and the symmetric kernels the rest of the crate
//! is built on: Cholesky, SPD solves and inverses, and a cyclic Jacobi
//! eigenvalue sweep.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Absolute tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
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
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
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

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Submatrix on the given row and column index lists, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(rows.len(), cols.len());
        for (a, &r) in rows.iter().enumerate() {
            for (b, &c) in cols.iter().enumerate() {
                out[(a, b)] = self[(r, c)];
            }
        }
        out
    }

    /// The matrix with row and column `k` deleted.
    pub fn without(&self, k: usize) -> Matrix {
        let keep: Vec<usize> = (0..self.rows).filter(|&i| i != k).collect();
        let keep_c: Vec<usize> = (0..self.cols).filter(|&j| j != k).collect();
        self.select(&keep, &keep_c)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Elementwise max |self - other|; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Checks squareness and symmetry within [`SYMMETRY_TOL`] and returns
    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let asym = self.max_asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        Ok(s)
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

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactorization {
    dim: usize,
    lower: Vec<f64>,
}

impl SpdFactorization {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.lower.clone(),
        }
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: b.len(),
            });
        }
        let n = self.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l(i, k) * y[k];
            }
            y[i] = s / self.l(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l(k, i) * y[k];
            }
            y[i] = s / self.l(i, i);
        }
        Ok(y)
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.dim;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e).expect("dimension checked");
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        // Solves are column-wise; restore exact symmetry.
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = avg;
                inv[(j, i)] = avg;
            }
        }
        inv
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// The input is symmetrized first. A pivot at or below `1e-12` times the
/// largest diagonal magnitude is reported as [`Error::NotPositiveDefinite`].
pub fn cholesky(a: &Matrix) -> Result<SpdFactorization> {
    let a = a.symmetrized()?;
    let n = a.rows();
    let scale = a.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut lower = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= lower[j * n + k] * lower[j * n + k];
        }
        if !(d > floor) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = libm::sqrt(d);
        lower[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= lower[i * n + k] * lower[j * n + k];
            }
            lower[i * n + j] = s / ljj;
        }
    }
    Ok(SpdFactorization { dim: n, lower })
}

pub fn solve_spd(f: &SpdFactorization, b: &[f64]) -> Result<Vec<f64>> {
    f.solve(b)
}

pub fn invert_spd(a: &Matrix) -> Result<Matrix> {
    Ok(cholesky(a)?.inverse())
}

/// `PA = LU` with partial pivoting; `L` has a unit diagonal and is stored
/// below the diagonal of `lu`.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactorization {
    lu: Matrix,
    perm: Vec<usize>,
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&r| b[r]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }
}

/// LU factorization with partial pivoting. Fails with `Singular` when a
/// pivot is at most `1e-14 · max|a|`.
pub fn lu(a: &Matrix) -> Result<LuFactorization> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| m[(r, col)].abs().total_cmp(&m[(s, col)].abs()))
            .expect("non-empty range");
        if m[(piv, col)].abs() <= 1e-14 * scale {
            return Err(Error::Singular);
        }
        if piv != col {
            for j in 0..n {
                m.data.swap(piv * n + j, col * n + j);
            }
            perm.swap(piv, col);
        }
        let d = m[(col, col)];
        for r in (col + 1)..n {
            let f = m[(r, col)] / d;
            m[(r, col)] = f;
            if f == 0.0 {
                continue;
            }
            for j in (col + 1)..n {
                m.data[r * n + j] -= f * m.data[col * n + j];
            }
        }
    }
    Ok(LuFactorization { lu: m, perm })
}

/// Solves a general square system by Gaussian elimination with partial
/// pivoting.
pub fn solve_dense(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
        });
    }
    lu(a)?.solve(b)
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi
/// rotations until the off-diagonal Frobenius norm drops below `tol`.
pub fn symmetric_eigenvalues(a: &Matrix, tol: f64) -> Result<Vec<f64>> {
    let mut m = a.symmetrized()?;
    let n = m.rows();
    let off = |m: &Matrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        libm::sqrt(s)
    };
    let tol = tol.max(f64::EPSILON * m.frobenius());
    for _sweep in 0..100 {
        if off(&m) < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
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
    let mut eig = m.diagonal();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Smallest eigenvalue of a symmetric matrix (see [`symmetric_eigenvalues`]).
pub fn min_eigenvalue(a: &Matrix, tol: f64) -> Result<f64> {
    Ok(symmetric_eigenvalues(a, tol)?
        .first()
        .copied()
        .unwrap_or(f64::INFINITY))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&Matrix::identity(3)).unwrap().lower();
        assert_eq!(l, Matrix::identity(3));

        let l = cholesky(&m(&[&[4.0, 0.0], &[0.0, 9.0]])).unwrap().lower();
        assert_eq!(l, m(&[&[2.0, 0.0], &[0.0, 3.0]]));

        let l = cholesky(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap().lower();
        let want = m(&[&[2f64.sqrt(), 0.0], &[1.0 / 2f64.sqrt(), 1.5f64.sqrt()]]);
        assert!(l.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite_and_asymmetric() {
        let err = cholesky(&m(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { pivot: 1, .. }));
        let err = cholesky(&m(&[&[1.0, 0.1], &[0.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric(_)));
        // round-off asymmetry is absorbed
        assert!(cholesky(&m(&[&[1.0, 1e-12], &[0.0, 1.0]])).is_ok());
    }

    #[test]
    fn solve_examples() {
        let f = cholesky(&Matrix::identity(2)).unwrap();
        assert_eq!(solve_spd(&f, &[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
        let f = cholesky(&m(&[&[4.0, 0.0], &[0.0, 9.0]])).unwrap();
        assert_eq!(solve_spd(&f, &[4.0, 18.0]).unwrap(), vec![1.0, 2.0]);
        let f = cholesky(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        let x = solve_spd(&f, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert!(matches!(
            solve_spd(&f, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invert_examples() {
        assert_eq!(invert_spd(&Matrix::identity(4)).unwrap(), Matrix::identity(4));
        let inv = invert_spd(&m(&[&[2.0, 0.0], &[0.0, 4.0]])).unwrap();
        assert!(inv.max_abs_diff(&m(&[&[0.5, 0.0], &[0.0, 0.25]])) < 1e-15);
        let inv = invert_spd(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        let want = m(&[&[2.0, -1.0], &[-1.0, 2.0]]).scale(1.0 / 3.0);
        assert!(inv.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn eigen_examples() {
        assert!((min_eigenvalue(&Matrix::identity(5), 1e-9).unwrap() - 1.0).abs() < 1e-12);
        let d = Matrix::from_diag(&[2.0, 0.5, 7.0]);
        assert!((min_eigenvalue(&d, 1e-9).unwrap() - 0.5).abs() < 1e-12);
        let a = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        assert!((min_eigenvalue(&a, 1e-9).unwrap() - 1.0).abs() < 1e-9);
        let e = symmetric_eigenvalues(&a, 1e-12).unwrap();
        assert!((e[1] - 3.0).abs() < 1e-9);
        let bad = m(&[&[1.0, 0.5], &[0.0, 1.0]]);
        assert!(matches!(min_eigenvalue(&bad, 1e-9), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn dense_solve() {
        let a = m(&[&[0.0, 2.0], &[3.0, 1.0]]);
        let x = solve_dense(&a, &[4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        let s = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(solve_dense(&s, &[1.0, 1.0]), Err(Error::Singular));
    }

    #[test]
    fn from_vec_rejects_nan() {
        assert_eq!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]), Err(Error::NonFinite));
    }

    #[test]
    fn lu_pivots_past_zero_diagonal() {
        let a = m(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let x = [1.0, -2.0, 0.5];
        let b = a.matvec(&x).unwrap();
        let got = lu(&a).unwrap().solve(&b).unwrap();
        assert!(max_abs(&[got[0] - x[0], got[1] - x[1], got[2] - x[2]]) < 1e-14);
        assert_eq!(lu(&m(&[&[1.0, 2.0], &[2.0, 4.0]])).unwrap_err(), Error::Singular);
    }
}
