//! Scalar abstraction: the whole library is generic over the floating-point
//! type, with `f32` and `f64` as the supported instantiations.

use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar used throughout the library.
///
/// Combines nalgebra's field/trig operations with num-traits conversions so
/// tolerances and physical constants written as `f64` literals can be lifted
/// into any instantiation.
pub trait Real:
    nalgebra::RealField + FromPrimitive + ToPrimitive + Copy + core::fmt::LowerExp
{
    /// Lifts an `f64` constant (tolerance, physical default) into `Self`.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal must be representable")
    }

    /// Lossy view as `f64`, used for diagnostics and error payloads.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Finite and strictly positive (false for NaN).
    #[inline]
    fn is_positive_finite(self) -> bool {
        self.is_finite() && self > Self::zero()
    }

    /// Finite and non-negative (false for NaN).
    #[inline]
    fn is_non_negative_finite(self) -> bool {
        self.is_finite() && self >= Self::zero()
    }
}

impl Real for f32 {}
impl Real for f64 {}
