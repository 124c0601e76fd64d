//! Numeric abstractions shared by the solvers.
//!
//! [`Scalar`] is the minimal field the simplex engine, the dense LU and the
//! DC power flow need: exact types such as [`BigRational`] implement it with
//! zero tolerances, so small cases can be solved without rounding. [`Real`]
//! adds the floating-point operations (square roots, Gaussian noise) that the
//! estimator and the detector rely on.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// An ordered field with explicit comparison tolerances.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Smallest magnitude accepted as a pivot element.
    fn pivot_tolerance() -> Self;

    /// Slack allowed when testing bounds and reduced costs.
    fn feasibility_tolerance() -> Self;

    /// Lossy conversion used at the I/O boundary.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::zero)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

/// Floating-point scalars.
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}

impl Scalar for f64 {
    fn pivot_tolerance() -> Self {
        1e-9
    }
    fn feasibility_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn pivot_tolerance() -> Self {
        1e-5
    }
    fn feasibility_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for BigRational {
    fn pivot_tolerance() -> Self {
        Self::zero()
    }
    fn feasibility_tolerance() -> Self {
        Self::zero()
    }
}

impl Scalar for Ratio<i64> {
    fn pivot_tolerance() -> Self {
        Self::zero()
    }
    fn feasibility_tolerance() -> Self {
        Self::zero()
    }
}

/// `sgn(x)`: 1, 0 or -1, with exact zero mapping to zero.
pub fn sign<T: Scalar>(x: &T) -> T {
    if x.is_zero() {
        T::zero()
    } else {
        x.signum()
    }
}

/// Exact rational from an integer numerator and denominator.
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
