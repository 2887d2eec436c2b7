//! Scalar abstraction: the core math is written once over a real scalar
//! type and instantiated at f32/f64 through the aliases in the crate root.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar: f32 or f64.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossless-enough conversion of literals and counters.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal must convert to the scalar type")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize must convert to the scalar type")
    }

    fn of_i64(v: i64) -> Self {
        Self::from_i64(v).expect("i64 must convert to the scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate's real scalar.
pub type C<T> = Complex<T>;

pub fn c_zero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

pub fn c_one<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

pub fn c_i<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// e^{i phi}
pub fn cis<T: Real>(phi: T) -> C<T> {
    Complex::new(phi.cos(), phi.sin())
}
