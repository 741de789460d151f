//! Exact rational scalars plus parsing and rendering helpers.
//!
//! Every quantity in the solver is a [`Rational`]; floats appear only when a
//! value is rendered for people to read.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Arbitrary-precision fraction, always stored in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

/// Shorthand for `n/d`. Panics on a zero denominator.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational {input:?}: expected \"int\" or \"int/int\" with a nonzero denominator")]
pub struct ParseRationalError {
    pub input: String,
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Strict parser: accepts `int` or `int/int` (optional leading minus on the
/// numerator only), no whitespace, no decimals.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError { input: s.to_string() };
    match s.split_once('/') {
        None => parse_int(s).map(Rational::from_integer).ok_or_else(err),
        Some((n, d)) => {
            if d.starts_with('-') {
                return Err(err());
            }
            let n = parse_int(n).ok_or_else(err)?;
            let d = parse_int(d).ok_or_else(err)?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(n, d))
        }
    }
}

/// Canonical `num/den` form, used by every serialized format.
pub fn to_fraction_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Compact form for tables: `3` instead of `3/1`.
pub fn to_compact_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        to_fraction_string(r)
    }
}

/// Decimal rendering with round-half-to-even at `places` digits.
pub fn to_decimal(r: &Rational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = r * Rational::from_integer(scale.clone());
    let floor = scaled.floor().to_integer();
    let frac = &scaled - Rational::from_integer(floor.clone());
    let half = rat(1, 2);
    let rounded = match frac.cmp(&half) {
        std::cmp::Ordering::Less => floor,
        std::cmp::Ordering::Greater => floor + 1,
        std::cmp::Ordering::Equal => {
            if floor.is_even() {
                floor
            } else {
                floor + 1
            }
        }
    };
    let negative = rounded.is_negative();
    let digits = rounded.abs().to_string();
    let places = places as usize;
    let body = if places == 0 {
        digits
    } else {
        let padded = format!("{:0>width$}", digits, width = places + 1);
        let (int_part, frac_part) = padded.split_at(padded.len() - places);
        format!("{int_part}.{frac_part}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Newtype used by serialization DTOs so that rationals travel as
/// `"num/den"` strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatStr(pub Rational);

impl Serialize for RatStr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&to_fraction_string(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_rational(&s).map(RatStr).map_err(serde::de::Error::custom)
    }
}

impl From<&Rational> for RatStr {
    fn from(r: &Rational) -> Self {
        RatStr(r.clone())
    }
}

impl fmt::Display for RatStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_compact_string(&self.0))
    }
}

pub(crate) fn rs(v: &[Rational]) -> Vec<RatStr> {
    v.iter().map(RatStr::from).collect()
}

pub(crate) fn unrs(v: Vec<RatStr>) -> Vec<Rational> {
    v.into_iter().map(|r| r.0).collect()
}

/// `serde(with = ...)` adaptor for a single `Rational` field.
pub mod serde_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        RatStr(r.clone()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        RatStr::deserialize(d).map(|r| r.0)
    }
}

/// `serde(with = ...)` adaptor for `Vec<Rational>`.
pub mod serde_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        rs(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<RatStr>::deserialize(d).map(unrs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_accepts_int_and_fraction() {
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational("-4/6").unwrap(), rat(-2, 3));
        assert_eq!(parse_rational("0/5").unwrap(), zero());
    }

    #[test]
    fn parse_rejects_loose_forms() {
        for bad in ["", "1.5", " 1", "1/", "/2", "1/0", "1/-2", "--1", "1/2/3", "+1", "a"] {
            assert!(parse_rational(bad).is_err(), "{bad:?} should be rejected");
        }
    }

    #[test]
    fn decimal_rounds_half_to_even() {
        assert_eq!(to_decimal(&rat(1, 2), 0), "0");
        assert_eq!(to_decimal(&rat(3, 2), 0), "2");
        assert_eq!(to_decimal(&rat(13, 18), 3), "0.722");
        assert_eq!(to_decimal(&rat(-1, 6), 3), "-0.167");
        assert_eq!(to_decimal(&rat(1, 8000), 3), "0.000");
        assert_eq!(to_decimal(&rat(3, 2000), 3), "0.002");
        assert_eq!(to_decimal(&rat(-3, 2), 3), "-1.500");
        assert_eq!(to_decimal(&int(12), 3), "12.000");
    }

    #[test]
    fn fraction_strings() {
        assert_eq!(to_fraction_string(&int(3)), "3/1");
        assert_eq!(to_compact_string(&int(3)), "3");
        assert_eq!(to_compact_string(&rat(6, -4)), "-3/2");
    }
}
