//! Scalar abstraction: the numeric kernels are generic over the floating
//! point type via `num-traits`. Concrete `f64` aliases live at the crate
//! root; `f32` instantiations compile but the shipped tolerances assume f64.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, RemAssign, SubAssign};

/// Floating-point scalar for all numeric kernels.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + RemAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an `f64` literal into the working scalar type.
///
/// Panics only if the target type cannot represent the constant at all,
/// which does not happen for f32/f64.
#[inline]
pub fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("constant not representable in scalar type")
}

/// Complex value over the working scalar.
pub type Cplx<R> = Complex<R>;

/// `i` in the working scalar type.
#[inline]
pub fn imag_unit<R: Real>() -> Cplx<R> {
    Complex::new(R::zero(), R::one())
}
