//! Scalar abstraction shared by the metric, statistics and loss routines.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::Num;

/// Numeric type that can hold counts and ratios of counts.
///
/// Implemented for `f32`, `f64` and the exact rationals `Ratio<i64>` /
/// `Ratio<i128>`, so count-derived quantities can be computed either in
/// floating point or exactly.
pub trait Scalar: Num + Copy + PartialOrd + Debug {
    fn from_count(n: u64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count overflows i64"))
    }
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl Scalar for Ratio<i128> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i128)
    }
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Converts an `f64` constant into a float scalar.
///
/// Panics only if the target type cannot represent finite `f64` values,
/// which never happens for `f32`/`f64`.
pub fn lit<F: num_traits::Float>(x: f64) -> F {
    F::from(x).expect("float literal out of range")
}
