//! Exact fractions for report values that must never be rounded.
//!
//! Protocol state is kept as raw integer pairs; this wrapper only enters
//! the picture when aggregating, e.g. the mean of the per-node estimates
//! in a metrics row. It serializes as the decimal string `"num/den"` in
//! canonical reduced form.

use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactFraction(BigRational);

impl ExactFraction {
    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    /// `num / den`; `den` must be nonzero.
    pub fn new(num: i64, den: u64) -> Self {
        assert!(den != 0, "fraction denominator must be nonzero");
        Self(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn add_ratio(&mut self, num: i64, den: u64) {
        assert!(den != 0, "fraction denominator must be nonzero");
        self.0 += BigRational::new(BigInt::from(num), BigInt::from(den));
    }

    pub fn div_by(&mut self, divisor: u64) {
        assert!(divisor != 0, "division by zero");
        self.0 /= BigInt::from(divisor);
    }

    /// Exact mean of the `(numerator, denominator)` pairs.
    pub fn mean_of(pairs: impl IntoIterator<Item = (i64, u64)>) -> Self {
        let mut sum = Self::zero();
        let mut count = 0u64;
        for (num, den) in pairs {
            sum.add_ratio(num, den);
            count += 1;
        }
        if count > 0 {
            sum.div_by(count);
        }
        sum
    }

    /// Rational equality with `num / den` (reduction-insensitive).
    pub fn equals_ratio(&self, num: i64, den: i64) -> bool {
        assert!(den != 0, "fraction denominator must be nonzero");
        self.0 == BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for ExactFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for ExactFraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
