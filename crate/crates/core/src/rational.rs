//! Exact rational helpers shared by every module.
//!
//! All probabilities, utilities and discount factors are [`BigRational`]s.
//! Text forms are `"p/q"` in lowest terms, or a bare integer for `q = 1`.
//! Decimal input (`"0.125"`) is accepted where user input is parsed and is
//! converted exactly, never through binary floating point.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serializer};
use thiserror::Error;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("{0:?} is not in lowest terms")]
    NotReduced(String),
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// `base^exp` for a (possibly negative) integer exponent.
pub fn pow(base: &Rational, exp: i32) -> Rational {
    num_traits::pow::Pow::pow(base, exp)
}

fn parse_integer(text: &str, whole: &str) -> Result<BigInt, RationalParseError> {
    let body = text.strip_prefix('-').unwrap_or(text);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(RationalParseError::Malformed(whole.to_string()));
    }
    text.parse::<BigInt>()
        .map_err(|_| RationalParseError::Malformed(whole.to_string()))
}

/// Strict parser for the file format: `"p/q"` in lowest terms with `q > 1`,
/// or a bare integer.
pub fn parse_canonical(text: &str) -> Result<Rational, RationalParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(RationalParseError::Empty);
    }
    match text.split_once('/') {
        None => Ok(Rational::from_integer(parse_integer(text, text)?)),
        Some((n, d)) => {
            let num = parse_integer(n, text)?;
            if d.starts_with('-') {
                return Err(RationalParseError::Malformed(text.to_string()));
            }
            let den = parse_integer(d, text)?;
            if den.is_zero() {
                return Err(RationalParseError::ZeroDenominator(text.to_string()));
            }
            if !num.gcd(&den).is_one() || den.is_one() {
                return Err(RationalParseError::NotReduced(text.to_string()));
            }
            Ok(Rational::new(num, den))
        }
    }
}

/// Lenient parser for user input: `"p/q"` (any terms), integers, and
/// decimal fractions such as `"0.1"` or `"-2.50"`.
pub fn parse_user(text: &str) -> Result<Rational, RationalParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(RationalParseError::Empty);
    }
    if let Some((n, d)) = text.split_once('/') {
        let num = parse_integer(n.trim(), text)?;
        let den = parse_integer(d.trim(), text)?;
        if den.is_zero() {
            return Err(RationalParseError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.strip_prefix('-').unwrap_or(whole);
        if frac.is_empty()
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || !whole_digits.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(RationalParseError::Malformed(text.to_string()));
        }
        let digits = format!("{whole_digits}{frac}");
        let mut num = digits
            .parse::<BigInt>()
            .map_err(|_| RationalParseError::Malformed(text.to_string()))?;
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Rational::new(num, den));
    }
    Ok(Rational::from_integer(parse_integer(text, text)?))
}

/// Canonical text form (`"p/q"` or `"k"`).
pub fn to_canonical(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Directed rounding used when printing decimal evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Down,
    Up,
}

/// Decimal expansion of `q` with `digits` fractional digits, rounded toward
/// negative infinity (`Down`) or positive infinity (`Up`).
pub fn to_decimal(q: &Rational, digits: usize, rounding: Rounding) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = q * Rational::from_integer(scale.clone());
    let n = match rounding {
        Rounding::Down => scaled.floor().to_integer(),
        Rounding::Up => scaled.ceil().to_integer(),
    };
    let negative = n.sign() == Sign::Minus;
    let (int_part, frac_part) = n.abs().div_rem(&scale);
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        return format!("{sign}{int_part}");
    }
    format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = digits)
}

/// Approximate value for human-readable output only.
pub fn approx_f64(q: &Rational) -> f64 {
    num_traits::ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
}

/// Wrapper whose `Display` is the canonical rational text.
pub struct Canonical<'a>(pub &'a Rational);

impl fmt::Display for Canonical<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_canonical(self.0))
    }
}

pub fn min_of<'a>(items: impl IntoIterator<Item = &'a Rational>) -> Option<&'a Rational> {
    items.into_iter().min_by(|a, b| a.cmp(b))
}

pub fn max_of<'a>(items: impl IntoIterator<Item = &'a Rational>) -> Option<&'a Rational> {
    items.into_iter().max_by(|a, b| a.cmp(b))
}

pub fn sign(q: &Rational) -> Ordering {
    q.cmp(&Rational::zero())
}

/// Serde adapter: rationals as canonical strings.
pub mod serde_canonical {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_canonical(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_canonical(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_canonical_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&to_canonical(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let items = Vec::<String>::deserialize(d)?;
        items
            .iter()
            .map(|t| parse_canonical(t).map_err(serde::de::Error::custom))
            .collect()
    }
}
