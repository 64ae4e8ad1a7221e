//! Exact coordinates in the ring of integers with 2 and 3 inverted.
//!
//! Lattice membership, tripling and containment have to be decided without a
//! tolerance, so every cube coordinate is a rational whose reduced denominator
//! only contains the primes 2 and 3.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A rational number `m · 2^a · 3^b`, kept in lowest terms.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicRational(Ratio<i128>);

fn strip_23(mut d: i128) -> i128 {
    while d % 2 == 0 {
        d /= 2;
    }
    while d % 3 == 0 {
        d /= 3;
    }
    d
}

impl DyadicRational {
    pub const ZERO: DyadicRational = DyadicRational(Ratio::new_raw(0, 1));
    pub const ONE: DyadicRational = DyadicRational(Ratio::new_raw(1, 1));

    pub fn from_int(v: i64) -> Self {
        DyadicRational(Ratio::from_integer(v as i128))
    }

    /// `num / den`; fails unless the reduced denominator is of the form `2^a 3^b`.
    pub fn new(num: i128, den: i128) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let r = Ratio::new(num, den);
        if strip_23(r.denom().abs()) != 1 {
            return Err(Error::InvalidArgument(format!(
                "{num}/{den} has a denominator outside 2^a 3^b"
            )));
        }
        Ok(DyadicRational(r))
    }

    /// `2^k` for any integer `k`.
    pub fn pow2(k: i32) -> Self {
        if k >= 0 {
            DyadicRational(Ratio::from_integer(1i128 << k))
        } else {
            DyadicRational(Ratio::new_raw(1, 1i128 << (-k)))
        }
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    /// Canonical `(mantissa, a, b)` with value `mantissa · 2^a · 3^b` and the
    /// mantissa coprime to 6 (all zero for the value zero).
    pub fn parts(&self) -> (i128, i32, i32) {
        if self.0.is_zero() {
            return (0, 0, 0);
        }
        let (mut n, mut d) = (self.numer(), self.denom());
        let (mut a, mut b) = (0i32, 0i32);
        while n % 2 == 0 {
            n /= 2;
            a += 1;
        }
        while n % 3 == 0 {
            n /= 3;
            b += 1;
        }
        while d % 2 == 0 {
            d /= 2;
            a -= 1;
        }
        while d % 3 == 0 {
            d /= 3;
            b -= 1;
        }
        debug_assert_eq!(d, 1);
        (n, a, b)
    }

    pub fn checked_add(&self, o: &Self) -> Result<Self> {
        self.0
            .checked_add(&o.0)
            .map(DyadicRational)
            .ok_or_else(|| Error::Overflow(format!("{self} + {o}")))
    }

    pub fn checked_sub(&self, o: &Self) -> Result<Self> {
        self.0
            .checked_sub(&o.0)
            .map(DyadicRational)
            .ok_or_else(|| Error::Overflow(format!("{self} - {o}")))
    }

    pub fn checked_mul(&self, o: &Self) -> Result<Self> {
        self.0
            .checked_mul(&o.0)
            .map(DyadicRational)
            .ok_or_else(|| Error::Overflow(format!("{self} * {o}")))
    }

    pub fn mul_int(&self, k: i64) -> Self {
        *self * DyadicRational::from_int(k)
    }

    pub fn mul_pow2(&self, k: i32) -> Self {
        *self * DyadicRational::pow2(k)
    }

    pub fn div3(&self) -> Self {
        DyadicRational(self.0 / Ratio::from_integer(3))
    }

    pub fn half(&self) -> Self {
        self.mul_pow2(-1)
    }

    /// `floor(self / unit)` for a positive unit.
    pub fn floor_div(&self, unit: &Self) -> i128 {
        assert!(unit.0.is_positive(), "floor_div needs a positive unit");
        (self.0 / unit.0).floor().to_integer()
    }

    /// True if `self / unit` is an integer.
    pub fn is_multiple_of(&self, unit: &Self) -> bool {
        (self.0 / unit.0).is_integer()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        DyadicRational(self.0.abs())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Base-2 logarithm when the value is an exact (positive) power of two.
    pub fn log2_exact(&self) -> Option<i32> {
        let (m, a, b) = self.parts();
        (m == 1 && b == 0).then_some(a)
    }
}

impl From<i64> for DyadicRational {
    fn from(v: i64) -> Self {
        DyadicRational::from_int(v)
    }
}

impl Add for DyadicRational {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.checked_add(&o).expect("exact coordinate overflow")
    }
}

impl Sub for DyadicRational {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.checked_sub(&o).expect("exact coordinate overflow")
    }
}

impl Mul for DyadicRational {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.checked_mul(&o).expect("exact coordinate overflow")
    }
}

impl Neg for DyadicRational {
    type Output = Self;
    fn neg(self) -> Self {
        DyadicRational(-self.0)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_foreign_denominators() {
        assert!(DyadicRational::new(1, 5).is_err());
        assert!(DyadicRational::new(1, 12).is_ok());
    }

    #[test]
    fn canonical_parts() {
        let x = DyadicRational::new(-20, 6).unwrap();
        assert_eq!(x.parts(), (-5, 1, -1));
        assert_eq!(DyadicRational::ZERO.parts(), (0, 0, 0));
        assert_eq!(DyadicRational::pow2(-3).log2_exact(), Some(-3));
        assert_eq!(DyadicRational::from_int(6).log2_exact(), None);
    }

    #[test]
    fn floor_and_multiples() {
        let third = DyadicRational::new(1, 3).unwrap();
        let x = DyadicRational::new(-5, 6).unwrap();
        assert_eq!(x.floor_div(&third), -3);
        assert!(DyadicRational::from_int(2).is_multiple_of(&third));
        assert!(!x.is_multiple_of(&third));
    }

    #[test]
    fn overflow_is_reported() {
        let big = DyadicRational::pow2(120);
        assert!(big.checked_mul(&big).is_err());
    }
}
