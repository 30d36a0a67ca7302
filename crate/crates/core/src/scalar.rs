//! Scalar abstraction for probability masses and homomorphism weights.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type used for masses: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + LowerExp + FromStr + Default + Send + Sync + 'static
{
    /// Tolerance for "sums to one" checks on a single measure.
    fn mass_tolerance() -> Self;

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn mass_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn mass_tolerance() -> Self {
        1e-5
    }
}

/// Pairwise (cascade) summation in slice order.
///
/// The order of additions depends only on the slice length, so aggregates
/// built from index-ordered results are bit-stable across thread counts.
pub fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
