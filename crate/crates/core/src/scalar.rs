//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the library can be instantiated with (`f32`, `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant. Panics only if the value is not representable,
    /// which cannot happen for finite inputs with `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal is representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Sum
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Rounds `t / step` to the nearest integer, returning the count and the
/// signed rounding error `t - count * step`.
pub fn nearest_multiple<T: Real>(t: T, step: T) -> (usize, T) {
    let ratio = t / step;
    let k = ratio.round().max(T::zero());
    let count = k.to_usize().unwrap_or(usize::MAX);
    (count, t - k * step)
}

/// Returns `Some(n)` when `t` is an integer multiple of `step` up to a relative
/// tolerance of `1e-9` (or the type's precision, whichever is larger).
pub fn exact_multiple<T: Real>(t: T, step: T) -> Option<usize> {
    let (count, err) = nearest_multiple(t, step);
    let tol = (T::lit(1e-9).max(T::epsilon() * T::lit(64.0))) * step;
    (err.abs() <= tol).then_some(count)
}
