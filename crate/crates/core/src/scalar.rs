//! Numeric abstraction shared by every analysis routine.
//!
//! All model arithmetic is written against [`Scalar`], so the same code runs on
//! `f64`/`f32` (with a comparison tolerance) and on [`Rational`] (exactly, with
//! a tolerance of zero).

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number used for exact computations.
pub type Rational = BigRational;

/// A real-like number usable in the restaking model.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Whether arithmetic on this type is exact.
    const EXACT: bool;

    /// Absolute comparison tolerance, scaled by magnitude in the `approx_*`
    /// helpers. Zero for exact types.
    fn tolerance() -> Self;

    /// Largest integer not greater than `self`.
    fn floor(&self) -> Self;

    fn from_f64_lossy(x: f64) -> Self;

    /// Converts a number written in decimal notation, such as a JSON literal.
    /// Exact types recover the decimal value rather than its binary
    /// approximation.
    fn from_literal(x: f64) -> Self {
        Self::from_f64_lossy(x)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits in scalar")
    }

    fn min_of(&self, other: &Self) -> Self {
        if other < self {
            other.clone()
        } else {
            self.clone()
        }
    }

    fn max_of(&self, other: &Self) -> Self {
        if other > self {
            other.clone()
        } else {
            self.clone()
        }
    }

    /// Tolerance scaled to the magnitude of `reference`.
    fn slack_for(reference: &Self) -> Self {
        Self::tolerance() * (Self::one() + reference.abs())
    }

    /// `self <= other`, with ties inside the tolerance counted as `true`.
    fn approx_le(&self, other: &Self) -> bool {
        *self <= other.clone() + Self::slack_for(other)
    }

    /// `self >= other`, with ties inside the tolerance counted as `true`.
    fn approx_ge(&self, other: &Self) -> bool {
        other.approx_le(self)
    }

    /// Strictly greater, beyond the tolerance.
    fn definitely_gt(&self, other: &Self) -> bool {
        !self.approx_le(other)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self.approx_le(other) && other.approx_le(self)
    }

    /// Equality up to a relative tolerance `rel` (ignored for exact types).
    fn rel_eq(&self, other: &Self, rel: f64) -> bool {
        if Self::EXACT {
            return self == other;
        }
        let scale = self.abs().max_of(&other.abs()).max_of(&Self::one());
        (self.clone() - other.clone()).abs() <= Self::from_f64_lossy(rel) * scale
    }
}

/// Sums an iterator of scalars.
pub fn sum<T: Scalar, I: IntoIterator<Item = T>>(items: I) -> T {
    items.into_iter().fold(T::zero(), |acc, x| acc + x)
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        1e-9
    }

    fn floor(&self) -> Self {
        f64::floor(*self)
    }

    fn from_f64_lossy(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        1e-5
    }

    fn floor(&self) -> Self {
        f32::floor(*self)
    }

    fn from_f64_lossy(x: f64) -> Self {
        x as f32
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn tolerance() -> Self {
        Rational::zero()
    }

    fn floor(&self) -> Self {
        BigRational::floor(self)
    }

    /// Converts the exact binary value of `x`. Non-finite inputs map to zero.
    fn from_f64_lossy(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(Rational::zero)
    }

    fn from_literal(x: f64) -> Self {
        if x.is_finite() {
            decimal(x)
        } else {
            Rational::zero()
        }
    }
}

/// Builds a rational `num / den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Converts a decimal literal such as `0.3` to the rational it denotes, rather
/// than the binary value of the nearest `f64`.
pub fn decimal(x: f64) -> Rational {
    let text = format!("{x}");
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i.to_string(), f.to_string()),
        None => (text.clone(), String::new()),
    };
    let digits: BigInt = format!("{int_part}{frac_part}")
        .parse()
        .expect("formatted float is a decimal");
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    Rational::new(digits, den)
}
