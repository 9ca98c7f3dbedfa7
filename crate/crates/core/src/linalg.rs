//! Dense row-major linear algebra for the small systems that arise in
//! linear-quadratic games: matrix-vector products, LU solves, symmetric
//! eigenvalues (cyclic Jacobi) and operator norms (power iteration).

use std::ops::{Index, IndexMut, Range};

use serde::{Deserialize, Serialize};

use crate::error::{structural, GameError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(structural(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows; `cols` is used when `rows` is empty.
    pub fn from_rows(rows: &[Vec<T>], cols: usize) -> Result<Self> {
        if rows.is_empty() {
            return Ok(Self::zeros(0, cols));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(structural("ragged matrix rows"));
        }
        if width != cols {
            return Err(structural(format!("matrix has {width} columns, expected {cols}")));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[T]) {
        for (r, &v) in values.iter().enumerate() {
            self[(r, c)] = v;
        }
    }

    /// `A v`
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    /// `A v` accumulated into `out`.
    pub fn mul_vec_add(&self, v: &[T], out: &mut [T]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o += dot(self.row(r), v);
        }
    }

    /// `Aᵀ v`
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        self.tr_mul_vec_add(v, &mut out);
        out
    }

    /// `Aᵀ v` accumulated into `out`.
    pub fn tr_mul_vec_add(&self, v: &[T], out: &mut [T]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &vr) in v.iter().enumerate() {
            if vr == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += a * vr;
            }
        }
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == T::zero() {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scaled(&self, s: T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn add(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.shape(), other.shape(), "add shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.shape(), other.shape(), "sub shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// Adds `s · a bᵀ` in place.
    pub fn rank_one_update(&mut self, s: T, a: &[T], b: &[T]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (r, &ar) in a.iter().enumerate() {
            let f = s * ar;
            let cols = self.cols;
            for (m, &bc) in self.data[r * cols..(r + 1) * cols].iter_mut().zip(b) {
                *m += f * bc;
            }
        }
    }

    /// `(A + Aᵀ)/2`
    pub fn sym_part(&self) -> Matrix<T> {
        assert_eq!(self.rows, self.cols, "symmetric part of non-square matrix");
        let half = T::lit(0.5);
        Matrix::from_fn(self.rows, self.cols, |r, c| half * (self[(r, c)] + self[(c, r)]))
    }

    pub fn frobenius_sq(&self) -> T {
        self.data.iter().map(|&v| v * v).sum()
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == T::zero())
    }

    /// Copies the column range into a new matrix.
    pub fn columns(&self, range: Range<usize>) -> Matrix<T> {
        Matrix::from_fn(self.rows, range.len(), |r, c| self[(r, range.start + c)])
    }

    /// Copies a sub-block.
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Matrix<T> {
        Matrix::from_fn(rows.len(), cols.len(), |r, c| self[(rows.start + r, cols.start + c)])
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| U::lit(v.as_f64())).collect() }
    }

    /// Largest singular value, computed by power iteration on `AᵀA`.
    pub fn op_norm(&self) -> T {
        op_norm_power(self)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

pub fn dist_sq<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

/// `y += s x`
pub fn axpy<T: Scalar>(s: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factors a square matrix; reports singularity when a pivot falls below
    /// `n · ε · max|A|`.
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(structural("LU factorization of non-square matrix"));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        let threshold = T::epsilon() * T::lit(n.max(1) as f64) * scale * T::lit(16.0);
        if scale == T::zero() && n > 0 {
            return Err(GameError::NoCertifiedSolution("singular linear system (zero matrix)".into()));
        }
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|r| (r, lu[(r, k)].abs()))
                .fold((k, T::lit(-1.0)), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= threshold {
                return Err(GameError::NoCertifiedSolution(format!(
                    "singular linear system (pivot {:e} at column {k})",
                    pivot.as_f64()
                )));
            }
            if p != k {
                perm.swap(p, k);
                for c in 0..n {
                    let tmp = lu[(k, c)];
                    lu[(k, c)] = lu[(p, c)];
                    lu[(p, c)] = tmp;
                }
            }
            let d = lu[(k, k)];
            for r in k + 1..n {
                let f = lu[(r, k)] / d;
                lu[(r, k)] = f;
                if f != T::zero() {
                    for c in k + 1..n {
                        let v = lu[(k, c)];
                        lu[(r, c)] -= f * v;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.perm.len();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for c in 0..r {
                let v = x[c];
                x[r] -= self.lu[(r, c)] * v;
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                let v = x[c];
                x[r] -= self.lu[(r, c)] * v;
            }
            x[r] /= self.lu[(r, r)];
        }
        x
    }
}

pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    Ok(Lu::factor(a)?.solve(b))
}

/// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
pub fn sym_eigenvalues<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "eigenvalues of non-square matrix");
    let mut m = a.sym_part();
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)] * m[(r, c)])
            .sum();
        let diag: T = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum();
        if off <= T::epsilon() * T::epsilon() * (diag + off) || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
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
    let mut eig: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eig
}

pub fn lambda_min<T: Scalar>(a: &Matrix<T>) -> T {
    sym_eigenvalues(a).first().copied().unwrap_or_else(T::zero)
}

pub fn lambda_max<T: Scalar>(a: &Matrix<T>) -> T {
    sym_eigenvalues(a).last().copied().unwrap_or_else(T::zero)
}

/// Largest singular value by power iteration on `AᵀA` with a fixed,
/// non-degenerate start vector.
pub fn op_norm_power<T: Scalar>(a: &Matrix<T>) -> T {
    let n = a.cols();
    if n == 0 || a.rows() == 0 || a.is_zero() {
        return T::zero();
    }
    // Irrational-ratio start vector so no eigenvector of AᵀA is orthogonal to it
    // for the matrices that arise in practice.
    let mut v: Vec<T> = (0..n)
        .map(|k| T::one() + T::lit(((k as f64 + 1.0) * 0.618_033_988_749_895).fract()))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut estimate = T::zero();
    for _ in 0..10_000 {
        let w = a.tr_mul_vec(&a.mul_vec(&v));
        let lambda = dot(&v, &w);
        let nw = norm(&w);
        if nw == T::zero() {
            return T::zero();
        }
        v = w.into_iter().map(|x| x / nw).collect();
        let converged = (lambda - estimate).abs() <= T::epsilon() * lambda * T::lit(4.0);
        estimate = lambda;
        if converged {
            break;
        }
    }
    // Final Rayleigh quotient on the normalized iterate.
    let av = a.mul_vec(&v);
    norm_sq(&av).max(estimate).sqrt()
}

/// Lower Cholesky-like factor `L` with `L Lᵀ = S` for a symmetric positive
/// semidefinite `S`; zero pivots produce zero columns.
pub fn psd_factor<T: Scalar>(s: &Matrix<T>) -> Result<Matrix<T>> {
    let n = s.rows();
    if n != s.cols() {
        return Err(structural("covariance must be square"));
    }
    let tol = T::epsilon() * T::lit(1e3) * s.max_abs().max(T::one());
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tol {
            return Err(structural("covariance is not positive semidefinite"));
        }
        if d <= tol {
            continue;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / djj;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        let cols = rows[0].len();
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), cols).unwrap()
    }

    #[test]
    fn lu_solves_small_system() {
        let a = m(&[&[4.0, -0.5], &[-0.5, 4.0]]);
        let x = solve(&a, &[1.0, 1.0]).unwrap();
        assert!((x[0] - 2.0 / 7.0).abs() < 1e-15);
        assert!((x[1] - 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn lu_reports_singular() {
        let a = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(solve(&a, &[1.0, 1.0]), Err(GameError::NoCertifiedSolution(_))));
    }

    #[test]
    fn jacobi_matches_closed_form_2x2() {
        let a = m(&[&[3.0, -0.5], &[-0.5, 3.0]]);
        let e = sym_eigenvalues(&a);
        assert!((e[0] - 2.5).abs() < 1e-14 && (e[1] - 3.5).abs() < 1e-14);
    }

    #[test]
    fn power_iteration_agrees_with_jacobi() {
        let a = m(&[&[1.0, 2.0, 0.0], &[0.5, -1.0, 3.0]]);
        let via_eig = lambda_max(&a.transpose().matmul(&a)).sqrt();
        assert!((op_norm_power(&a) - via_eig).abs() < 1e-12);
        // top eigenvector orthogonal to the all-ones vector
        let b = m(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        assert!((op_norm_power(&b) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn psd_factor_handles_singular_covariance() {
        let s = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let l = psd_factor(&s).unwrap();
        let back = l.matmul(&l.transpose());
        assert!(back.sub(&s).max_abs() < 1e-12);
    }
}
