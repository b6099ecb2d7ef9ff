//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point type the simulation and renderer are generic over: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` literal into `Self`, rounding if needed.
    fn lit(value: f64) -> Self;

    /// Lossy conversion to `f64`.
    fn as_f64(self) -> f64;

    /// Lossy conversion from `f32`, used when reading single precision file payloads.
    fn from_f32_lossy(value: f32) -> Self;

    /// Lossy conversion to `f32`, used when writing single precision file payloads.
    fn as_f32(self) -> f32;

    fn is_finite_value(self) -> bool {
        self.as_f64().is_finite()
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline(always)]
            fn lit(value: f64) -> Self {
                value as $t
            }

            #[inline(always)]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline(always)]
            fn from_f32_lossy(value: f32) -> Self {
                value as $t
            }

            #[inline(always)]
            fn as_f32(self) -> f32 {
                self as f32
            }

            #[inline(always)]
            fn is_finite_value(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(<f64 as Real>::lit(0.25), 0.25);
        assert_eq!(<f32 as Real>::lit(0.25), 0.25f32);
        assert!(!<f64 as Real>::is_finite_value(f64::NAN));
        assert!(<f32 as Real>::is_finite_value(1.0));
    }
}
