//! Scalar abstraction for the closed-form math layer.
//!
//! Formulas that are pure functions of real numbers (antenna gains, path loss,
//! stability times, softmax weights) are generic over [`Scalar`] so they work
//! in `f32` or `f64`. Simulation state sticks to the crate-level `Real` alias.

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar usable by the closed-form formulas.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for literal constants in formulas.
    fn c(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal converts to scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion_roundtrips() {
        assert_eq!(f64::c(2.028), 2.028);
        assert_eq!(f32::c(1.5), 1.5f32);
    }

    fn generic_square<S: Scalar>(x: S) -> S {
        x * x
    }

    #[test]
    fn works_for_both_widths() {
        assert_eq!(generic_square(3.0f64), 9.0);
        assert_eq!(generic_square(3.0f32), 9.0f32);
    }
}
