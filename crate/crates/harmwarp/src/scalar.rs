//! Scalar abstractions.
//!
//! [`Scalar`] is what the purely algebraic code (structure constants,
//! connection tables, curvature of left-invariant fields) needs: field
//! operations and an ordering. Exact rationals such as
//! `num_rational::Ratio<i64>` satisfy it, so the Milnor tables can be
//! checked without rounding. [`Real`] adds transcendental functions and is
//! required by everything that integrates, differentiates or samples.

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};
use std::fmt::Debug;
use std::ops::Neg;

pub trait Scalar:
    Copy
    + Debug
    + PartialOrd
    + Num
    + Neg<Output = Self>
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Copy
        + Debug
        + PartialOrd
        + Num
        + Neg<Output = T>
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}

pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}

/// Converts an `f64` literal. Panics only for values the target type cannot
/// represent at all, which never happens for the small constants used here.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal not representable in scalar type")
}

#[inline]
pub fn two<T: Scalar>() -> T {
    T::one() + T::one()
}

#[inline]
pub fn half<T: Scalar>() -> T {
    T::one() / two::<T>()
}

#[inline]
pub fn abs<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        -x
    } else {
        x
    }
}

#[inline]
pub fn max_of<T: Scalar>(a: T, b: T) -> T {
    if a >= b {
        a
    } else {
        b
    }
}

#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
