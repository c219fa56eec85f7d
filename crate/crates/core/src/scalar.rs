//! Scalar abstractions.
//!
//! [`Scalar`] is the field used by the discrete generator and the linear
//! solvers, so exact rationals can stand in for floats when checking the
//! stencil. [`Real`] adds the transcendental functions needed by the closed
//! forms and the Monte Carlo code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Ordered field element with exact or floating arithmetic.
pub trait Scalar:
    Copy + Num + NumAssign + Signed + PartialOrd + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion used for diagnostics and CSV output.
    fn to_f64_lossy(self) -> f64;

    /// Converts a literal constant. Panics only for non-finite input.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

/// Floating point scalar: `f32` or `f64`.
pub trait Real: Scalar + Float + FloatConst + Sum {}

impl Scalar for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Exact rational scalar for small stencil checks.
pub type Rational = Ratio<i128>;

impl Scalar for Rational {
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Converts between scalar types through `f64`.
pub fn cast<A: Scalar, B: Scalar>(x: A) -> B {
    B::lit(x.to_f64_lossy())
}
