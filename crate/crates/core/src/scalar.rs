//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point type the library is generic over (`f32` or `f64`).
///
/// Math methods (`sin`, `sqrt`, `abs`, ...) come from [`RealField`]; literal
/// conversion goes through [`Scalar::lit`].
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(value: f64) -> Self;

    /// Lossless (f64) or widening (f32) conversion back to `f64`.
    fn as_f64(self) -> f64;

    fn from_count(value: usize) -> Self {
        Self::lit(value as f64)
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(value: f64) -> Self {
        value
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline]
    fn lit(value: f64) -> Self {
        value as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}
