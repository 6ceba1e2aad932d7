//! Floating point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type the solvers are generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every supported scalar can represent (a rounding of) any `f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// 1-norm of a slice.
pub fn norm1<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, v| acc + v.abs())
}

/// 1-norm of `a - b`.
pub fn diff_norm1<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + (*x - *y).abs())
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

pub fn sum<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, v| acc + *v)
}

pub(crate) fn scale<T: Scalar>(x: &mut [T], s: T) {
    for v in x.iter_mut() {
        *v *= s;
    }
}
