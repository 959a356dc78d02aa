//! Heap-allocated dense matrices.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Wraps row-major `data`; fails when the length does not equal `rows·cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                context: "dense matrix data",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension {
                context: "matrix product inner dimension",
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == T::zero() {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self · v`.
    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::Dimension {
                context: "matrix-vector product",
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    /// Transposed matrix-vector product `selfᵀ · v`.
    pub fn tr_matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.rows {
            return Err(Error::Dimension {
                context: "transposed matrix-vector product",
                expected: self.rows,
                actual: v.len(),
            });
        }
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    /// Gram matrix `selfᵀ · self`.
    pub fn gram(&self) -> SymMatrix<T> {
        let n = self.cols;
        let mut g = vec![T::zero(); n * n];
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let a = row[i];
                if a == T::zero() {
                    continue;
                }
                for j in i..n {
                    g[i * n + j] += a * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i];
            }
        }
        SymMatrix { dim: n, data: g }
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Copies `block` into this matrix with its top-left corner at (`r0`, `c0`).
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// Copies out the `rows×cols` block starting at (`r0`, `c0`).
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Square symmetric matrix; every constructor symmetrizes its input so that
/// `m(i, j) == m(j, i)` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = T::one();
        }
        m
    }

    /// Builds `½(M + Mᵀ)` from a square row-major matrix.
    pub fn from_row_major(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Dimension {
                context: "symmetric matrix data",
                expected: dim * dim,
                actual: data.len(),
            });
        }
        let mut m = Self { dim, data };
        m.symmetrize();
        Ok(m)
    }

    /// Symmetric part of a square dense matrix.
    pub fn from_dense(m: &DenseMatrix<T>) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::Dimension {
                context: "symmetric matrix from dense (columns)",
                expected: m.rows(),
                actual: m.cols(),
            });
        }
        Self::from_row_major(m.rows(), m.as_slice().to_vec())
    }

    /// Builds a matrix from the upper triangle produced by `f(i, j)` for `i ≤ j`.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Rank-one outer product `v vᵀ`.
    pub fn outer(v: &[T]) -> Self {
        Self::from_upper_fn(v.len(), |i, j| v[i] * v[j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    /// Sets entries (i, j) and (j, i) together.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Adds `v` to (i, j) and, off the diagonal, also to (j, i).
    #[inline]
    pub fn add_sym(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] += v;
        if i != j {
            self.data[j * self.dim + i] += v;
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        DenseMatrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Frobenius inner product `tr(self · other)`.
    pub fn inner(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum()
    }

    /// Quadratic form `vᵀ self v`.
    pub fn quad_form(&self, v: &[T]) -> T {
        let n = self.dim;
        let mut s = T::zero();
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let ri: T = row.iter().zip(v).map(|(&a, &b)| a * b).sum();
            s += v[i] * ri;
        }
        s
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        let n = self.dim;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + s * b).collect(),
        }
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        let h = T::lit(0.5);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (self.data[i * n + j] + self.data[j * n + i]) * h;
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_symmetrizes_exactly() {
        let m = SymMatrix::<f64>::from_row_major(2, vec![1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(DenseMatrix::<f64>::from_row_major(2, 3, vec![0.0; 5]).is_err());
        assert!(SymMatrix::<f64>::from_row_major(2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn gram_matches_explicit_product() {
        let a = DenseMatrix::<f64>::from_fn(5, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 1.3));
        let g = a.gram();
        let p = a.transpose().matmul(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((g.get(i, j) - p[(i, j)]).abs() < 1e-12);
            }
        }
    }
}
