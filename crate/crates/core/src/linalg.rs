//! Small dense matrices (parameter covariances are at most 7×7).

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
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

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
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

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols.max(1)).map(<[T]>::to_vec).collect()
    }

    pub fn scale(&self, c: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * c).collect() }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `vᵀ A v`.
    pub fn quad_form(&self, v: &[T]) -> T {
        v.iter().zip(self.mul_vec(v)).map(|(&a, b)| a * b).sum()
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Replaces the matrix by `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let half = T::c(0.5);
        for i in 0..self.rows {
            for j in 0..i {
                let v = half * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    /// Block-diagonal composition `[[A, 0], [0, B]]`.
    pub fn block_diag(a: &Self, b: &Self) -> Self {
        let n = a.rows + b.rows;
        let m = a.cols + b.cols;
        let mut out = Self::zeros(n, m);
        for i in 0..a.rows {
            for j in 0..a.cols {
                out[(i, j)] = a[(i, j)];
            }
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                out[(a.rows + i, a.cols + j)] = b[(i, j)];
            }
        }
        out
    }

    /// Lower Cholesky factor, or `None` if the matrix is not symmetric
    /// positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }

    /// Inverse of a symmetric positive definite matrix via Cholesky.
    pub fn spd_inverse(&self) -> Option<Self> {
        let l = self.cholesky()?;
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        for col in 0..n {
            // L y = e_col
            let mut y = vec![T::zero(); n];
            for i in 0..n {
                let mut s = if i == col { T::one() } else { T::zero() };
                for k in 0..i {
                    s = s - l[(i, k)] * y[k];
                }
                y[i] = s / l[(i, i)];
            }
            // Lᵀ x = y
            let mut x = vec![T::zero(); n];
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in (i + 1)..n {
                    s = s - l[(k, i)] * x[k];
                }
                x[i] = s / l[(i, i)];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        inv.symmetrize();
        Some(inv)
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        assert!(self.is_square() && b.len() == self.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| {
                a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if !(a[(p, k)].abs() > T::zero()) {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
                x.swap(k, p);
            }
            for i in (k + 1)..n {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] = a[(i, j)] - f * v;
                }
                x[i] = x[i] - f * x[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s = s - a[(i, j)] * x[j];
            }
            x[i] = s / a[(i, i)];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}
