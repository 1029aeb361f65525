//! Scalar abstractions for the numeric parts of the crate.
//!
//! Metric arithmetic only needs a field with exact or floating division, so
//! [`MetricScalar`] admits both `f64` and rational types such as
//! `num::BigRational`. Model training needs transcendental functions, so
//! [`RealScalar`] is restricted to IEEE floats.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, NumAssign};

/// Values metrics are computed in: ratios of integer counts.
///
/// `f64` gives the report scalar; `num::BigRational` gives exact arithmetic
/// for oracle comparisons.
pub trait MetricScalar: Num + FromPrimitive + Clone + PartialOrd + Debug {}

impl<T: Num + FromPrimitive + Clone + PartialOrd + Debug> MetricScalar for T {}

/// Floating-point scalar for model weights and training arithmetic.
pub trait RealScalar:
    Float + NumAssign + FromPrimitive + Default + Debug + Send + Sync + 'static
{
}

impl<T: Float + NumAssign + FromPrimitive + Default + Debug + Send + Sync + 'static> RealScalar
    for T
{
}

/// Converts an integer count ratio `num / den` into the metric scalar.
///
/// Returns zero when the denominator is zero; every metric in this crate
/// defines `0/0` as `0`.
pub fn ratio<T: MetricScalar>(num: u64, den: u64) -> T {
    if den == 0 {
        T::zero()
    } else {
        let n = T::from_u64(num).expect("count representable in metric scalar");
        let d = T::from_u64(den).expect("count representable in metric scalar");
        n / d
    }
}
