//! Floating point abstraction used by the inference math.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance used when checking that a vector lies on the probability simplex.
    fn simplex_tolerance() -> Self;

    /// Two policy masses closer than this are treated as a tie.
    fn tie_tolerance() -> Self;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }
}

impl Scalar for f64 {
    #[inline]
    fn simplex_tolerance() -> Self {
        1e-9
    }

    #[inline]
    fn tie_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    #[inline]
    fn simplex_tolerance() -> Self {
        1e-5
    }

    #[inline]
    fn tie_tolerance() -> Self {
        1e-6
    }
}
