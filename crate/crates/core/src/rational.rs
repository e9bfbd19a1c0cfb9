//! Exact rationals used for every epsilon, bound and density comparison.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Parses `p/q` or a bare integer `p`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| Error::ParameterOutOfRange(format!("`{text}` is not a rational p/q")))?;
    let den: BigInt = den.parse().map_err(|_| Error::ParameterOutOfRange(format!("`{text}` is not a rational p/q")))?;
    if den.is_zero() {
        return Err(Error::ParameterOutOfRange(format!("`{text}` has a zero denominator")));
    }
    Ok(Rational::new(num, den))
}

/// Canonical `p/q` text, always reduced, denominator positive, `/1` kept.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Smallest positive integer `m` with `m >= r` (r > 0).
pub(crate) fn ceil_positive(r: &Rational) -> Option<i64> {
    debug_assert!(r.is_positive());
    let c = r.ceil().to_integer();
    i64::try_from(c).ok()
}

pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
