//! Floating-point abstraction shared by every numerical kernel in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real scalar type the solvers are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances quoted throughout the crate
/// are calibrated for `f64`; `f32` instantiations are supported for
/// smoke-testing and throughput experiments.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Unit roundoff of the type.
    fn unit_roundoff() -> Self {
        Self::epsilon() / (Self::one() + Self::one())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into the working scalar type.
#[inline(always)]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts an integer into the working scalar type.
#[inline(always)]
pub fn from_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("integer representable in scalar type")
}

/// Lossy conversion to `f64` for reporting and for the dense eigen solvers.
#[inline(always)]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
