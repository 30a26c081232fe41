//! Scalar abstractions.
//!
//! The polyhedral machinery (simplex, double description, markets, measure
//! polytopes, pricing) is written against [`Scalar`], which covers `f32`,
//! `f64` and the exact [`Rational`] type. Utility functions and entropy
//! functionals need transcendental functions and use [`Real`] instead.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Exact arbitrary-precision rational.
pub type Rational = BigRational;

/// Ordered field element usable by the linear-algebra and LP code.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Magnitude at or below which a pivot, residual or reduced cost counts
    /// as zero. Exact types return zero.
    fn tolerance() -> Self;

    /// Converts a finite `f64`. Panics on NaN or infinity.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| panic!("non-finite scalar input {x}"))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        false
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    /// Strictly positive beyond tolerance.
    fn is_positive_tol(&self) -> bool {
        *self > Self::tolerance()
    }

    /// Strictly negative beyond tolerance.
    fn is_negative_tol(&self) -> bool {
        *self < -Self::tolerance()
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    /// Reads `x` as its shortest round-trip decimal, so `0.1` becomes
    /// `1/10` rather than the nearest binary fraction.
    fn from_f64_lossy(x: f64) -> Self {
        if !x.is_finite() {
            panic!("non-finite scalar input {x}");
        }
        let text = format!("{x:e}");
        let (mantissa, exp) = text.split_once('e').expect("exponent form");
        let exp: i32 = exp.parse().expect("exponent digits");
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        let digits: BigInt = format!("{int_part}{frac_part}").parse().expect("mantissa digits");
        let shift = exp - frac_part.len() as i32;
        let ten = BigInt::from(10);
        if shift >= 0 {
            BigRational::from_integer(digits * num_traits::pow(ten, shift as usize))
        } else {
            BigRational::new(digits, num_traits::pow(ten, (-shift) as usize))
        }
    }

    fn is_exact() -> bool {
        true
    }
}

/// Floating-point scalar for utility and entropy computations.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Lifts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("representable literal")
    }

    fn as_f64(self) -> f64 {
        <Self as num_traits::ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `n` points geometrically spaced from `lo` to `hi` inclusive.
pub fn log_grid<F: Real>(lo: F, hi: F, n: usize) -> Vec<F> {
    assert!(n >= 2 && lo > F::zero() && hi > lo);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / F::lit((n - 1) as f64);
    (0..n)
        .map(|i| (llo + step * F::lit(i as f64)).exp())
        .collect()
}
