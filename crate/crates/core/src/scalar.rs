//! Scalar abstraction for the numeric kernels.

use std::fmt::{Display, LowerExp};

use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type the solver kernels are generic over.
///
/// `nalgebra::RealField` supplies field arithmetic and the elementary
/// functions; the `num_traits` bounds add checked conversion from/to `f64`,
/// which is how tolerances and tuning constants written as `f64` literals
/// enter generic code.
pub trait Real:
    nalgebra::RealField + FromPrimitive + ToPrimitive + Copy + Default + Display + LowerExp
{
    /// Machine epsilon of the concrete scalar.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn cst<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant must convert into the scalar type")
}

/// Lossless view of a scalar as `f64` (both supported scalars embed in f64).
#[inline]
pub fn as_f64<T: Real>(v: T) -> f64 {
    v.to_f64().expect("scalar must convert to f64")
}
