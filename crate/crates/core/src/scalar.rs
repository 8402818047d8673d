//! Scalar abstractions.
//!
//! Grid computations run over any [`Real`] (f32 or f64). The combinatorial
//! parts (linear programming over packings, counting identities) also accept
//! exact rationals through [`LpField`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::{BigRational, Rational64};
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive, Zero};
use rustfft::FftNum;

/// Floating point scalar used for densities and information functionals.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// An ordered field suitable for the simplex method.
///
/// Floats compare against a small pivot tolerance; exact types compare
/// against zero.
pub trait LpField: Num + Clone + PartialOrd + Signed + Debug {
    /// Magnitude below which a value is treated as zero in pivoting.
    fn pivot_eps() -> Self;

    /// Slack allowed when checking `<=` constraints.
    fn feasibility_tol() -> Self;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn to_f64_lossy(&self) -> f64;

    #[inline]
    fn is_positive_tol(&self) -> bool {
        *self > Self::pivot_eps()
    }

    #[inline]
    fn is_negative_tol(&self) -> bool {
        *self < -Self::pivot_eps()
    }
}

impl LpField for f64 {
    fn feasibility_tol() -> Self {
        1e-12
    }
    fn pivot_eps() -> Self {
        1e-12
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl LpField for f32 {
    fn feasibility_tol() -> Self {
        1e-6
    }
    fn pivot_eps() -> Self {
        1e-6
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f32 / den as f32
    }
    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl LpField for Rational64 {
    fn feasibility_tol() -> Self {
        Rational64::zero()
    }
    fn pivot_eps() -> Self {
        Rational64::zero()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational64::new(num, den)
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl LpField for BigRational {
    fn feasibility_tol() -> Self {
        BigRational::zero()
    }
    fn pivot_eps() -> Self {
        BigRational::zero()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}
