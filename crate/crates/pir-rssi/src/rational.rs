//! Exact rational arithmetic.
//!
//! Rates, bounds and audit probabilities are exact rationals end to end; no
//! floating point appears anywhere in a verdict. `BigRational` keeps values
//! reduced with a positive denominator, so equality is decidable equality.

use num::{BigInt, BigRational, One, Zero};

pub type Rational = num::BigRational;

/// Shorthand constructor from machine integers.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    assert!(denom != 0, "zero denominator");
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn ratio_u128(numer: u128, denom: u128) -> Rational {
    assert!(denom != 0, "zero denominator");
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn zero() -> Rational {
    BigRational::zero()
}

pub fn one() -> Rational {
    BigRational::one()
}

/// ⌈a/b⌉ for nonnegative integers, b > 0.
pub fn ceil_div(a: u64, b: u64) -> u64 {
    assert!(b > 0);
    a.div_ceil(b)
}

/// Binomial coefficient; small arguments only (n ≤ 64 in this crate).
pub fn binomial(n: u64, m: u64) -> u64 {
    if m > n {
        return 0;
    }
    num::integer::binomial(n, m)
}
