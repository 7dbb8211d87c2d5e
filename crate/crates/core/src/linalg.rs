//! Small dense symmetric linear algebra.
//!
//! The matrices handled here are projected diffusion matrices of reduced
//! models (a few dozen rows at most) and FIM blocks, so a cyclic Jacobi
//! eigensolver is accurate and fast enough, and it works for any
//! [`Scalar`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square dense matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `v^T M v`.
    pub fn quadratic_form(&self, v: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            let mut row = T::zero();
            for j in 0..self.n {
                row = row + self[(i, j)] * v[j];
            }
            acc = acc + v[i] * row;
        }
        acc
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Principal submatrix on `idx`.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns eigenvalues and the eigenvectors as columns of the second
    /// matrix. Only the lower triangle's symmetric part is meaningful.
    pub fn symmetric_eigen(&self) -> (Vec<T>, Matrix<T>) {
        let n = self.n;
        let mut a = self.clone();
        for i in 0..n {
            for j in 0..i {
                let s = (a[(i, j)] + a[(j, i)]) / T::lit(2.0);
                a[(i, j)] = s;
                a[(j, i)] = s;
            }
        }
        let mut v = Self::identity(n);
        let scale = a.frobenius();
        if n < 2 || scale == T::zero() {
            return ((0..n).map(|i| a[(i, i)]).collect(), v);
        }
        let tol = T::epsilon() * scale;
        for _sweep in 0..100 {
            let mut off = T::zero();
            for i in 0..n {
                for j in 0..i {
                    off = off + a[(i, j)] * a[(i, j)];
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    let theta = (aqq - app) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let t = if theta == T::zero() { T::one() } else { t };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    a[(p, q)] = T::zero();
                    a[(q, p)] = T::zero();
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        ((0..n).map(|i| a[(i, i)]).collect(), v)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Moore–Penrose inverse of a symmetric positive semidefinite matrix with
/// its pseudo-log-determinant.
#[derive(Debug, Clone)]
pub struct PseudoInverse<T> {
    pub inverse: Matrix<T>,
    /// `V diag(1/sqrt(lambda)) V^T` over the retained spectrum.
    pub inverse_sqrt: Matrix<T>,
    pub log_det: T,
    pub rank: usize,
}

/// Relative eigenvalue cutoff suitable for `T` at dimension `n`.
pub fn default_rtol<T: Scalar>(n: usize) -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(64.0 * n.max(1) as f64))
}

/// Pseudo-inverse through the eigen-decomposition: eigenvalues at or below
/// `rtol * lambda_max` count as zero. Rejects inputs whose asymmetry exceeds
/// `1e-10 * ||M||_F`.
pub fn pseudo_inverse<T: Scalar>(m: &Matrix<T>, rtol: T) -> Result<PseudoInverse<T>> {
    let norm = m.frobenius();
    let asym = m.max_asymmetry();
    if asym > T::lit(1e-10) * norm {
        return Err(Error::NotSymmetric(asym.to_f64_lossy()));
    }
    let n = m.dim();
    let (vals, vecs) = m.symmetric_eigen();
    let lmax = vals.iter().copied().fold(T::zero(), T::max);
    let mut inverse = Matrix::zeros(n);
    let mut inverse_sqrt = Matrix::zeros(n);
    let mut log_det = T::zero();
    let mut rank = 0;
    if lmax > T::zero() {
        let cut = rtol * lmax;
        for (e, &lam) in vals.iter().enumerate() {
            if lam <= cut {
                continue;
            }
            rank += 1;
            log_det = log_det + lam.ln();
            let inv = T::one() / lam;
            let inv_sqrt = inv.sqrt();
            for i in 0..n {
                let vi = vecs[(i, e)];
                if vi == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let w = vi * vecs[(j, e)];
                    inverse[(i, j)] = inverse[(i, j)] + w * inv;
                    inverse_sqrt[(i, j)] = inverse_sqrt[(i, j)] + w * inv_sqrt;
                }
            }
        }
    }
    Ok(PseudoInverse { inverse, inverse_sqrt, log_det, rank })
}
