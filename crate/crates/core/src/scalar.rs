//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point rate type: `f32` or `f64`.
///
/// All model quantities (data rates, capacities, latencies) use the same
/// scalar. Tolerances are specified as `f64` literals and converted with
/// [`Scalar::lit`], so single precision runs with the same code but coarser
/// guarantees.
pub trait Scalar:
    Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// `num / den` with the conventions used throughout the latency model:
    /// `0 / anything = 0`, `positive / 0 = +inf`.
    #[inline]
    fn ratio(num: Self, den: Self) -> Self {
        if num <= Self::zero() {
            Self::zero()
        } else if den <= Self::zero() {
            Self::infinity()
        } else {
            num / den
        }
    }

    /// Square root clamped at zero, for quantities that are nonnegative up to
    /// rounding.
    #[inline]
    fn sqrt_pos(self) -> Self {
        if self <= Self::zero() {
            Self::zero()
        } else {
            self.sqrt()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `value ≤ bound` with a combined relative/absolute slack.
#[inline]
pub(crate) fn within<T: Scalar>(value: T, bound: T, tol: T) -> bool {
    value <= bound + tol * (T::one() + bound.abs())
}
