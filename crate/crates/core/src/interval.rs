//! Closed rational intervals and outward-rounded real powers.
//!
//! Interval endpoints are exact rationals, so sums and products are exact.
//! Only roots introduce rounding, and those are rounded outward.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::rational::{pow, to_decimal, Rational, Rounding};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

/// Sign of an interval, if it is determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalSign {
    Negative,
    Zero,
    Positive,
    Indeterminate,
}

impl Interval {
    /// Panics if `lo > hi`.
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "empty interval");
        Interval { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn sign(&self) -> IntervalSign {
        if self.hi.is_negative() {
            IntervalSign::Negative
        } else if self.lo.is_positive() {
            IntervalSign::Positive
        } else if self.lo.is_zero() && self.hi.is_zero() {
            IntervalSign::Zero
        } else {
            IntervalSign::Indeterminate
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = products.iter().min().unwrap().clone();
        let hi = products.iter().max().unwrap().clone();
        Interval { lo, hi }
    }

    pub fn scale(&self, k: &Rational) -> Interval {
        self.mul(&Interval::point(k.clone()))
    }

    /// Reciprocal of an interval not containing zero.
    pub fn recip(&self) -> Option<Interval> {
        if self.contains(&Rational::zero()) {
            return None;
        }
        Some(Interval {
            lo: self.hi.recip(),
            hi: self.lo.recip(),
        })
    }

    /// Decimal rendering `[lo, hi]` rounded outward.
    pub fn to_decimal_string(&self, digits: usize) -> (String, String) {
        (
            to_decimal(&self.lo, digits, Rounding::Down),
            to_decimal(&self.hi, digits, Rounding::Up),
        )
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.to_decimal_string(12);
        write!(f, "[{lo}, {hi}]")
    }
}

/// Encloses the real `q`-th root of a positive rational `x` in an interval
/// of width at most `x_den^{-1} 2^{-bits}` relative to the scale of `x`.
///
/// The result is a single point when the root is rational at that scale.
pub fn nth_root(x: &Rational, q: u32, bits: u32) -> Interval {
    assert!(x.is_positive(), "root of a nonpositive number");
    assert!(q >= 1);
    if q == 1 {
        return Interval::point(x.clone());
    }
    // x^{1/q} = (N D^{q-1})^{1/q} / D
    let n = x.numer();
    let d = x.denom();
    let scale = BigInt::one() << bits;
    let radicand = n * d.pow(q - 1) * scale.pow(q);
    let floor = radicand.nth_root(q);
    let denom = d * &scale;
    let lo = Rational::new(floor.clone(), denom.clone());
    if floor.pow(q) == radicand {
        return Interval::point(lo);
    }
    let hi = Rational::new(floor + 1, denom);
    Interval { lo, hi }
}

/// Encloses `s^{e}` for positive rational `s` and rational exponent `e`.
pub fn rational_power(s: &Rational, e: &Rational, bits: u32) -> Interval {
    assert!(s.is_positive(), "power of a nonpositive base");
    let p: i32 = e.numer().try_into().expect("exponent numerator fits in 32 bits");
    let q: u32 = e.denom().try_into().expect("exponent denominator fits in 32 bits");
    let base = pow(s, p);
    nth_root(&base, q, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn exact_roots_are_points() {
        assert_eq!(nth_root(&int(16), 2, 20), Interval::point(int(4)));
        assert_eq!(nth_root(&ratio(8, 27), 3, 20), Interval::point(ratio(2, 3)));
        assert_eq!(rational_power(&int(10), &int(2), 20), Interval::point(int(100)));
        assert_eq!(rational_power(&int(4), &ratio(-1, 2), 20), Interval::point(ratio(1, 2)));
    }

    #[test]
    fn sqrt_two_is_enclosed() {
        let i = nth_root(&int(2), 2, 40);
        assert!(!i.is_point());
        assert!(i.lo() * i.lo() < int(2) && i.hi() * i.hi() > int(2));
        assert!(i.width() <= ratio(1, 1 << 40));
    }

    #[test]
    fn half_power_of_ten() {
        // 10^{4.5} = 31622.776...
        let i = rational_power(&int(10), &ratio(9, 2), 30);
        assert!(i.lo() > &int(31622) && i.hi() < &int(31623));
    }

    #[test]
    fn arithmetic_and_sign() {
        let a = Interval::new(int(-1), int(2));
        let b = Interval::new(int(3), int(4));
        assert_eq!(a.mul(&b), Interval::new(int(-4), int(8)));
        assert_eq!(b.sub(&a), Interval::new(int(1), int(5)));
        assert_eq!(a.sign(), IntervalSign::Indeterminate);
        assert_eq!(b.neg().sign(), IntervalSign::Negative);
        assert_eq!(b.recip(), Some(Interval::new(ratio(1, 4), ratio(1, 3))));
        assert_eq!(a.recip(), None);
    }
}
