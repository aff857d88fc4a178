//! Scalar abstraction shared by every kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating-point type the tensors and solvers are generic over.
///
/// Implemented for `f32` and `f64`. Text I/O relies on `Display` producing the
/// shortest string that parses back to the same value, which both primitive
/// float types guarantee.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal")
    }

    /// Smallest positive threshold usable as an underflow guard: `1e-300` in
    /// `f64`, the smallest normal number in narrower types.
    #[inline]
    fn tiny() -> Self {
        Self::lit(1e-300).max(Self::min_positive_value())
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dot product with eight independent accumulators so the inner loop can be
/// pipelined even though float addition is not reassociated by the compiler.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let base = c * 8;
        for lane in 0..8 {
            acc[lane] = acc[lane] + a[base + lane] * b[base + lane];
        }
    }
    let mut tail = T::zero();
    for i in chunks * 8..a.len() {
        tail = tail + a[i] * b[i];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}
