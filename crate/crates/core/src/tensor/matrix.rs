use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};
use crate::tensor::Vector;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
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

    /// Builds a matrix from nested rows of `f64` literals.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend(row.iter().map(|&v| T::lit(v)));
        }
        Ok(Self { rows: r, cols: c, data })
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

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector<T> {
        Vector::from_fn(self.rows, |i| self[(i, j)])
    }

    pub fn set_column(&mut self, j: usize, v: &[T]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[T]) -> Vector<T> {
        assert_eq!(x.len(), self.cols, "matrix-vector dimension mismatch");
        Vector::from_fn(self.rows, |i| dot(self.row(i), x))
    }

    /// `self * x` restricted to the first `k` columns.
    pub fn mul_vec_leading(&self, x: &[T], k: usize) -> Vector<T> {
        Vector::from_fn(self.rows, |i| dot(&self.row(i)[..k], &x[..k]))
    }

    /// `self^T * x` restricted to the first `k` columns.
    pub fn tr_mul_vec_leading(&self, x: &[T], k: usize) -> Vector<T> {
        let mut out = Vector::zeros(k);
        for (i, &xi) in x.iter().enumerate().take(self.rows) {
            let row = &self.row(i)[..k];
            for (o, &a) in out.iter_mut().zip(row) {
                *o = *o + a * xi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn diagonal(&self) -> Vector<T> {
        Vector::from_fn(self.rows.min(self.cols), |i| self[(i, i)])
    }

    /// Diagonal part, same shape.
    pub fn diagonal_part(&self) -> Self {
        Self::from_fn(
            self.rows,
            self.cols,
            |i, j| if i == j { self[(i, j)] } else { T::zero() },
        )
    }

    /// Lower-triangular part including the diagonal, same shape.
    pub fn lower_triangular_part(&self) -> Self {
        Self::from_fn(
            self.rows,
            self.cols,
            |i, j| if j <= i { self[(i, j)] } else { T::zero() },
        )
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self[(i, j)] == T::zero()))
    }

    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn norm_fro(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}
