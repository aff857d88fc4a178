use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::scalar::{dot, Scalar};

/// Dense real vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector<T> {
    data: Vec<T>,
}

impl<T: Scalar> Vector<T> {
    pub fn zeros(len: usize) -> Self {
        Self::filled(len, T::zero())
    }

    pub fn ones(len: usize) -> Self {
        Self::filled(len, T::one())
    }

    pub fn filled(len: usize, value: T) -> Self {
        Self { data: vec![value; len] }
    }

    pub fn from_fn(len: usize, f: impl FnMut(usize) -> T) -> Self {
        Self {
            data: (0..len).map(f).collect(),
        }
    }

    pub fn from_f64_slice(values: &[f64]) -> Self {
        Self {
            data: values.iter().map(|&v| T::lit(v)).collect(),
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn dot(&self, other: &Self) -> T {
        dot(&self.data, &other.data)
    }

    /// Euclidean norm, scaled to avoid overflow for large entries.
    pub fn norm2(&self) -> T {
        let scale = self.norm_inf();
        if scale == T::zero() || !scale.is_finite() {
            return scale;
        }
        let s: T = self.data.iter().map(|&v| (v / scale) * (v / scale)).sum();
        scale * s.sqrt()
    }

    pub fn norm_inf(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, &v| if v.abs() > m || v.is_nan() { v.abs() } else { m })
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.len(), |i| self.data[i] - other.data[i])
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(self.len(), |i| self.data[i] + other.data[i])
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_fn(self.len(), |i| self.data[i] * s)
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: T, other: &Self) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + s * b;
        }
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.data.iter().all(|&v| v > T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Componentwise power `x^[p]`.
    ///
    /// Integer exponents use plain repeated multiplication (left to right, so
    /// the result is bit-identical to contracting the identity tensor).
    /// Non-integer exponents use the sign-preserving real power
    /// `sign(v) * |v|^p`, which keeps odd roots of negative entries real.
    pub fn elementwise_pow(&self, p: T) -> Self {
        Self {
            data: self.data.iter().map(|&v| pow_component(v, p)).collect(),
        }
    }
}

pub(crate) fn pow_component<T: Scalar>(v: T, p: T) -> T {
    if p == p.round() && p.abs() <= T::lit(64.0) {
        let e = p.abs().to_i32().unwrap_or(0);
        if e == 0 {
            return T::one();
        }
        let mut acc = v;
        for _ in 1..e {
            acc = acc * v;
        }
        if p < T::zero() {
            T::one() / acc
        } else {
            acc
        }
    } else if p == p.round() {
        v.powf(p)
    } else if v < T::zero() {
        -(-v).powf(p)
    } else {
        v.powf(p)
    }
}

/// Free-function form of [`Vector::elementwise_pow`].
pub fn elementwise_pow<T: Scalar>(x: &Vector<T>, p: T) -> Vector<T> {
    x.elementwise_pow(p)
}

impl<T> From<Vec<T>> for Vector<T> {
    fn from(data: Vec<T>) -> Self {
        Self { data }
    }
}

impl<T> Deref for Vector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.data
    }
}

impl<T> DerefMut for Vector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
}

impl<T> FromIterator<T> for Vector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self {
            data: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_and_square() {
        let x = Vector::<f64>::from(vec![4.0, 9.0]);
        assert_eq!(x.elementwise_pow(0.5).as_slice(), &[2.0, 3.0]);
        let y = Vector::<f64>::from(vec![2.0, 3.0]);
        assert_eq!(y.elementwise_pow(2.0).as_slice(), &[4.0, 9.0]);
    }

    #[test]
    fn negative_cube_root_is_real() {
        let x = Vector::<f64>::from(vec![-8.0]);
        let r = x.elementwise_pow(1.0 / 3.0);
        assert!((r[0] + 2.0).abs() < 1e-15);
        // cube it back
        assert!((r.elementwise_pow(3.0)[0] + 8.0).abs() < 1e-12);
    }

    #[test]
    fn zero_exponent_gives_ones() {
        let x = Vector::<f64>::from(vec![-3.0, 0.0, 5.0]);
        assert_eq!(x.elementwise_pow(0.0).as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn norm2_handles_huge_entries() {
        let x = Vector::<f64>::from(vec![3e200, 4e200]);
        assert!((x.norm2() / 5e200 - 1.0).abs() < 1e-15);
        assert_eq!(Vector::<f64>::zeros(3).norm2(), 0.0);
    }
}
