//! Scalar abstraction. Everything downstream (samplers, histograms, estimators,
//! fits) is generic over [`Real`], instantiated as `f32` or `f64`; the crate
//! root exports `f64`-concrete aliases for the common case.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar for simulation and estimation.
///
/// A blanket impl covers any type with the listed capabilities, which in
/// practice means `f32` and `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Conversion from an `f64` constant or precomputed value.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    /// Conversion from an event tally.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("u64 conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f64 widening")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + Display
        + Debug
        + Send
        + Sync
        + 'static
{
}
