//! Dense order-`m`, dimension-`n` tensors and the mode-product family.
//!
//! Entries are stored in lexicographic order with the first index varying
//! slowest, so `a[i1, i2, ..., im]` lives at
//! `i1 * n^(m-1) + i2 * n^(m-2) + ... + im`. Public docs quote indices
//! 1-based where they refer to the usual mathematical notation; every slice
//! index accepted by the API is 0-based.

mod io;
mod matrix;
pub(crate) mod vector;

pub use io::{read_tensor, write_tensor};
pub use matrix::DenseMatrix;
pub use vector::{elementwise_pow, Vector};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// Structural parts of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// Entries with `i1 = i2 = ... = im`.
    Diagonal,
    /// Entries with `i2, ..., im <= i1`.
    LowerTriangular,
    /// Entries with `i1 = i2`.
    DiagonalFace,
    /// Entries with `i2 <= i1`.
    LowerHalf,
}

/// Dense real tensor of order `m` and dimension `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor<T> {
    order: usize,
    dim: usize,
    data: Vec<T>,
}

fn checked_len(order: usize, dim: usize) -> Result<usize> {
    u32::try_from(order)
        .ok()
        .and_then(|o| dim.checked_pow(o))
        .ok_or_else(|| Error::InvalidDimension(format!("{dim}^{order} overflows")))
}

impl<T: Scalar> DenseTensor<T> {
    /// Wraps `data` as an order-`order` tensor. Order 1 is accepted so that a
    /// mode product of a matrix can still be represented as a tensor.
    pub fn new(order: usize, dim: usize, data: Vec<T>) -> Result<Self> {
        if order < 1 || dim < 1 {
            return Err(Error::InvalidDimension(format!("order {order}, dim {dim}")));
        }
        let len = checked_len(order, dim)?;
        if data.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: data.len(),
            });
        }
        Ok(Self { order, dim, data })
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        let len = checked_len(order, dim)?;
        Self::new(order, dim, vec![T::zero(); len])
    }

    /// Identity tensor: ones on the superdiagonal `i1 = ... = im`, zero elsewhere.
    pub fn identity(order: usize, dim: usize) -> Result<Self> {
        if order < 2 || dim < 1 {
            return Err(Error::InvalidDimension(format!(
                "identity needs m >= 2, n >= 1; got m={order}, n={dim}"
            )));
        }
        let mut t = Self::zeros(order, dim)?;
        let step = t.diagonal_stride();
        for i in 0..dim {
            t.data[i * step] = T::one();
        }
        Ok(t)
    }

    /// Builds a tensor by evaluating `f` at every 0-based multi-index.
    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let len = checked_len(order, dim)?;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; order];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, dim);
        }
        Self::new(order, dim, data)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Linear offset of a 0-based multi-index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: T) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    /// Offset between consecutive superdiagonal entries: `1 + n + ... + n^(m-1)`.
    fn diagonal_stride(&self) -> usize {
        (0..self.order).fold(0, |acc, _| acc * self.dim + 1)
    }

    /// Offset of `(i, j, j, ..., j)`.
    fn majorization_offset(&self, i: usize, j: usize) -> usize {
        let tail = (0..self.order - 1).fold(0, |acc, _| acc * self.dim + 1);
        i * self.dim.pow(self.order as u32 - 1) + j * tail
    }

    /// Superdiagonal entries `a_{i i ... i}`.
    pub fn diagonal_entries(&self) -> Vector<T> {
        let step = self.diagonal_stride();
        Vector::from_fn(self.dim, |i| self.data[i * step])
    }

    fn check_vector(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Contracts the last index against `x`.
    fn contract_last(data: &[T], dim: usize, x: &[T]) -> Vec<T> {
        data.chunks_exact(dim).map(|row| dot(row, x)).collect()
    }

    /// `k`-mode product with `x`, where `k` is the 1-based mode number in
    /// `2..=m`. Returns an order-`(m-1)` tensor.
    pub fn mode_product(&self, k: usize, x: &[T]) -> Result<Self> {
        self.check_vector(x)?;
        if k < 2 || k > self.order {
            return Err(Error::ModeOutOfRange {
                mode: k,
                order: self.order,
            });
        }
        let n = self.dim;
        let inner = n.pow((self.order - k) as u32);
        let outer = self.data.len() / (inner * n);
        let mut out = vec![T::zero(); outer * inner];
        for o in 0..outer {
            let dst = &mut out[o * inner..(o + 1) * inner];
            for (j, &xj) in x.iter().enumerate() {
                let src = &self.data[(o * n + j) * inner..(o * n + j + 1) * inner];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = *d + s * xj;
                }
            }
        }
        Self::new(self.order - 1, n, out)
    }

    /// `A x^{m-1}`: component `i` is `sum a_{i i2 ... im} x_{i2} ... x_{im}`.
    pub fn apply_xm1(&self, x: &[T]) -> Result<Vector<T>> {
        self.check_vector(x)?;
        let mut cur = Self::contract_last(&self.data, self.dim, x);
        for _ in 2..self.order {
            cur = Self::contract_last(&cur, self.dim, x);
        }
        Ok(cur.into())
    }

    /// `A x^{m-2}` as an `n x n` matrix. For an order-2 tensor this is the
    /// tensor itself.
    pub fn apply_xm2(&self, x: &[T]) -> Result<DenseMatrix<T>> {
        self.check_vector(x)?;
        if self.order < 2 {
            return Err(Error::InvalidDimension("apply_xm2 needs order >= 2".into()));
        }
        let mut cur: Option<Vec<T>> = None;
        for _ in 2..self.order {
            let src = cur.as_deref().unwrap_or(&self.data);
            cur = Some(Self::contract_last(src, self.dim, x));
        }
        let data = cur.unwrap_or_else(|| self.data.clone());
        DenseMatrix::new(self.dim, self.dim, data)
    }

    /// Majorization matrix: `M(A)_{ij} = a_{i j j ... j}`.
    pub fn majorization_matrix(&self) -> DenseMatrix<T> {
        if self.order < 2 {
            return DenseMatrix::from_fn(self.dim, self.dim, |i, j| if i == j { self.data[i] } else { T::zero() });
        }
        DenseMatrix::from_fn(self.dim, self.dim, |i, j| self.data[self.majorization_offset(i, j)])
    }

    /// Tensor keeping only the entries admitted by `part`.
    pub fn extract_part(&self, part: Part) -> Self {
        let mut out = self.clone();
        let mut idx = vec![0usize; self.order];
        for v in out.data.iter_mut() {
            if !part_admits(part, &idx) {
                *v = T::zero();
            }
            increment(&mut idx, self.dim);
        }
        out
    }

    /// True iff every off-diagonal entry is nonpositive.
    pub fn is_z_tensor(&self) -> bool {
        let step = self.diagonal_stride();
        self.data
            .iter()
            .enumerate()
            .all(|(p, &v)| v <= T::zero() || (p % step == 0 && p / step < self.dim))
    }

    /// Positive-probe certificate for a nonsingular M-tensor: `A` is a
    /// Z-tensor and `A probe^{m-1} > 0` componentwise.
    pub fn verify_nonsingular_m_tensor(&self, probe: &[T]) -> Result<bool> {
        self.check_vector(probe)?;
        if !probe.iter().all(|&v| v > T::zero()) {
            return Err(Error::NonpositiveProbe);
        }
        if !self.is_z_tensor() {
            return Ok(false);
        }
        Ok(self.apply_xm1(probe)?.iter().all(|&v| v > T::zero()))
    }

    /// Largest absolute difference between an entry and its image under a
    /// swap of two adjacent modes. Adjacent transpositions generate every
    /// permutation, so zero means the tensor is fully symmetric.
    pub fn symmetry_defect(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for t in 0..self.order.saturating_sub(1) {
            let s_hi = n.pow((self.order - 1 - t) as u32);
            let s_lo = s_hi / n;
            for (p, &v) in self.data.iter().enumerate() {
                let d_hi = (p / s_hi) % n;
                let d_lo = (p / s_lo) % n;
                if d_hi <= d_lo {
                    continue;
                }
                let q = p - d_hi * s_hi - d_lo * s_lo + d_lo * s_hi + d_hi * s_lo;
                let diff = (v - self.data[q]).abs();
                if diff > worst || diff.is_nan() {
                    worst = diff;
                }
            }
        }
        worst
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.symmetry_defect() <= tol
    }

    /// `c * self`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            order: self.order,
            dim: self.dim,
            data: self.data.iter().map(|&v| v * c).collect(),
        }
    }

    /// `self - other`, shapes must agree.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.data.len(),
                found: other.data.len(),
            });
        }
        Ok(Self {
            order: self.order,
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    /// Matrix-tensor product `(M A)_{i1 i2 ... im} = sum_j M_{i1 j} a_{j i2 ... im}`.
    pub fn left_matrix_product(&self, m: &DenseMatrix<T>) -> Result<Self> {
        if m.rows() != self.dim || m.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.rows(),
            });
        }
        let slab = self.data.len() / self.dim;
        let mut out = vec![T::zero(); self.data.len()];
        for i in 0..self.dim {
            let dst = &mut out[i * slab..(i + 1) * slab];
            for j in 0..self.dim {
                let c = m[(i, j)];
                if c == T::zero() {
                    continue;
                }
                for (d, &s) in dst.iter_mut().zip(&self.data[j * slab..(j + 1) * slab]) {
                    *d = *d + c * s;
                }
            }
        }
        Self::new(self.order, self.dim, out)
    }

    /// Visits every entry with its 0-based multi-index.
    pub fn for_each_indexed(&self, mut f: impl FnMut(&[usize], T)) {
        let mut idx = vec![0usize; self.order];
        for &v in &self.data {
            f(&idx, v);
            increment(&mut idx, self.dim);
        }
    }
}

fn part_admits(part: Part, idx: &[usize]) -> bool {
    let i1 = idx[0];
    match part {
        Part::Diagonal => idx.iter().all(|&i| i == i1),
        Part::LowerTriangular => idx[1..].iter().all(|&i| i <= i1),
        Part::DiagonalFace => idx.len() < 2 || idx[1] == i1,
        Part::LowerHalf => idx.len() < 2 || idx[1] <= i1,
    }
}

/// Odometer increment in lexicographic order (last index fastest).
fn increment(idx: &mut [usize], dim: usize) {
    for d in idx.iter_mut().rev() {
        *d += 1;
        if *d < dim {
            return;
        }
        *d = 0;
    }
}
