//! Floating-point abstraction for the whole pipeline.
//!
//! Every solver in this crate is written against [`Scalar`] so the same code
//! runs in `f32` or `f64`. The concrete aliases used by the CLI live at the
//! crate root; `f64` is what the acceptance tolerances are calibrated for.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Scalar type of all numerical state: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + serde::Serialize
    + serde::de::DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossy conversion of constants.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable")
    }

    /// Conversion from small integers (grid sizes, mode indices, ...).
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("count not representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `max(|a|, |b|)`, used for relative-error denominators.
pub fn abs_max<T: Scalar>(a: T, b: T) -> T {
    a.abs().max(b.abs())
}

/// Relative difference `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_diff<T: Scalar>(a: T, b: T, floor: T) -> T {
    (a - b).abs() / abs_max(a, b).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_roundtrip() {
        assert_eq!(f64::of(1.5), 1.5);
        assert_eq!(f32::of(0.25), 0.25f32);
        assert_eq!(f64::of_usize(7), 7.0);
    }

    #[test]
    fn rel_diff_handles_zero() {
        assert_eq!(rel_diff(0.0f64, 0.0, 1e-300), 0.0);
        assert!((rel_diff(1.0f64, 1.0 + 1e-12, 1e-300) - 1e-12).abs() < 1e-13);
    }
}
