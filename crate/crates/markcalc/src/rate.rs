//! Exact nonnegative rational rates.
//!
//! Bisimilarity is defined through equality of rate sums, so rates are kept
//! as exact rationals end to end: parsing, the semantic rules, exit-rate
//! computation and partition refinement never round.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// A nonnegative rational, stored in lowest terms with a positive denominator.
///
/// The value zero is admitted so that rate sums over empty multisets are
/// representable; prefix construction and the parsers require strictly
/// positive rates.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rate(BigRational);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RateError {
    #[error("rate denominator must be nonzero")]
    ZeroDenominator,
    #[error("rates must be nonnegative")]
    Negative,
    #[error("malformed rate literal `{0}`")]
    Malformed(String),
}

impl Rate {
    pub fn zero() -> Self {
        Rate(BigRational::zero())
    }

    pub fn one() -> Self {
        Rate(BigRational::one())
    }

    pub fn from_integer(n: u64) -> Self {
        Rate(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn new(numerator: u64, denominator: u64) -> Result<Self, RateError> {
        if denominator == 0 {
            return Err(RateError::ZeroDenominator);
        }
        Ok(Rate(BigRational::new(
            BigInt::from(numerator),
            BigInt::from(denominator),
        )))
    }

    pub(crate) fn from_big(numerator: BigInt, denominator: BigInt) -> Result<Self, RateError> {
        if denominator.is_zero() {
            return Err(RateError::ZeroDenominator);
        }
        let r = BigRational::new(numerator, denominator);
        if r.is_negative() {
            return Err(RateError::Negative);
        }
        Ok(Rate(r))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// Rate scaled by a transition multiplicity.
    pub fn scaled(&self, mult: u64) -> Rate {
        Rate(&self.0 * BigRational::from_integer(BigInt::from(mult)))
    }

    pub fn min(self, other: Rate) -> Rate {
        if self.0 <= other.0 {
            self
        } else {
            other
        }
    }

    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
    }
}

impl Add for Rate {
    type Output = Rate;
    fn add(self, rhs: Rate) -> Rate {
        Rate(self.0 + rhs.0)
    }
}

impl Add<&Rate> for Rate {
    type Output = Rate;
    fn add(self, rhs: &Rate) -> Rate {
        Rate(self.0 + &rhs.0)
    }
}

impl AddAssign<&Rate> for Rate {
    fn add_assign(&mut self, rhs: &Rate) {
        self.0 += &rhs.0;
    }
}

impl Mul for Rate {
    type Output = Rate;
    fn mul(self, rhs: Rate) -> Rate {
        Rate(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Rate> for &'a Rate {
    type Output = Rate;
    fn mul(self, rhs: &'a Rate) -> Rate {
        Rate(&self.0 * &rhs.0)
    }
}

impl Sum for Rate {
    fn sum<I: Iterator<Item = Rate>>(iter: I) -> Rate {
        iter.fold(Rate::zero(), Rate::add)
    }
}

/// Prints in lowest terms, as `n` for integers and `n/d` otherwise.
impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rate({})", self)
    }
}

/// Accepts the canonical forms produced by [`Rate::to_string`]: an integer
/// `n` or a fraction `n/d`. Used when reading rates back from JSON.
impl FromStr for Rate {
    type Err = RateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || RateError::Malformed(s.to_string());
        let parse_int = |t: &str| BigInt::from_str(t).map_err(|_| malformed());
        match s.split_once('/') {
            None => Rate::from_big(parse_int(s)?, BigInt::one()),
            Some((n, d)) => Rate::from_big(parse_int(n)?, parse_int(d)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_terms_and_display() {
        let r = Rate::new(6, 4).unwrap();
        assert_eq!(r.to_string(), "3/2");
        assert_eq!(Rate::new(4, 2).unwrap().to_string(), "2");
        assert_eq!(Rate::zero().to_string(), "0");
    }

    #[test]
    fn exact_sum_and_product() {
        let a = Rate::new(1, 3).unwrap();
        let b = Rate::new(1, 6).unwrap();
        assert_eq!(a.clone() + b, Rate::new(1, 2).unwrap());
        assert_eq!(a.clone() * a, Rate::new(1, 9).unwrap());
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(Rate::new(1, 0), Err(RateError::ZeroDenominator));
    }

    #[test]
    fn parses_canonical_forms() {
        assert_eq!("3/2".parse::<Rate>().unwrap(), Rate::new(3, 2).unwrap());
        assert_eq!("7".parse::<Rate>().unwrap(), Rate::from_integer(7));
        assert!("x/2".parse::<Rate>().is_err());
        assert!("-1".parse::<Rate>().is_err());
    }

    #[test]
    fn scaling_by_multiplicity() {
        assert_eq!(Rate::new(3, 2).unwrap().scaled(4), Rate::from_integer(6));
    }
}
