//! Scalar abstraction for probabilities.
//!
//! Networks, samplers and the exact oracle are written against [`Probability`]
//! so the same code runs in `f64` (the default everywhere) or `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type usable as a probability.
pub trait Probability:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Tolerance used when checking that a distribution row sums to one.
    fn row_tolerance() -> Self;

    /// Lossless widening to `f64`.
    fn to_f64_lossless(self) -> f64 {
        self.to_f64().expect("probability scalar converts to f64")
    }

    /// Conversion from `f64`, rounding to nearest.
    fn from_f64_lossy(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("f64 converts to probability scalar")
    }
}

impl Probability for f64 {
    fn row_tolerance() -> Self {
        1e-9
    }
}

impl Probability for f32 {
    fn row_tolerance() -> Self {
        // a handful of ulps per entry
        64.0 * f32::EPSILON
    }
}
