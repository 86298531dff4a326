//! Univariate polynomials with rational coefficients and Sturm-sequence
//! root isolation.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// Coefficients from the constant term upward, with no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<Rational>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn sign_at(&self, x: &Rational) -> i8 {
        let v = self.eval(x);
        if v.is_zero() {
            0
        } else if v.is_positive() {
            1
        } else {
            -1
        }
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    /// Quotient and remainder of division by a nonzero `divisor`.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Rational::zero(); self.coeffs.len().saturating_sub(dd).max(1)];
        while rem.len() > dd && !rem.is_empty() {
            let shift = rem.len() - 1 - dd;
            let factor = rem.last().unwrap() / &lead;
            for (k, c) in divisor.coeffs.iter().enumerate() {
                rem[shift + k] -= &factor * c;
            }
            quot[shift] = factor;
            rem.pop();
            while rem.last().is_some_and(|c| c.is_zero()) {
                rem.pop();
            }
        }
        (Poly::new(quot), Poly::new(rem))
    }

    fn monic(&self) -> Poly {
        match self.leading() {
            Some(l) => Poly::new(self.coeffs.iter().map(|c| c / l).collect()),
            None => self.clone(),
        }
    }

    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// The product of the distinct irreducible factors, up to a constant.
    pub fn squarefree(&self) -> Poly {
        let g = self.gcd(&self.derivative());
        if g.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        self.div_rem(&g).0
    }

    fn sturm_chain(&self) -> Vec<Poly> {
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(Poly::new(r.coeffs.into_iter().map(|c| -c).collect()));
        }
        chain
    }

    /// The smallest root of odd multiplicity in the open interval `(0, 1)`.
    ///
    /// Those are exactly the points where the polynomial changes sign.
    pub fn first_sign_change_in_unit(&self, tolerance: &Rational) -> Option<RootBracket> {
        if self.degree().unwrap_or(0) == 0 {
            return None;
        }
        let sf = self.squarefree();
        let chain = sf.sturm_chain();
        let mut lo = Rational::zero();
        let one = Rational::one();
        loop {
            if count_roots(&chain, &lo, &one) == 0 {
                return None;
            }
            // Shrink (lo, hi] until it holds exactly one root of sf.
            let mut hi = one.clone();
            while count_roots(&chain, &lo, &hi) > 1 {
                let mid = (&lo + &hi) / Rational::from_integer(2.into());
                if count_roots(&chain, &lo, &mid) >= 1 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if hi == one && sf.eval(&one).is_zero() {
                return None;
            }
            let changes = if sf.eval(&hi).is_zero() {
                let probe = step_past(&chain, &hi, &one);
                self.sign_at(&lo) != self.sign_at(&probe)
            } else {
                self.sign_at(&lo) != self.sign_at(&hi)
            };
            if changes {
                return Some(refine(&sf, lo, hi, tolerance));
            }
            lo = hi;
        }
    }
}

/// Number of distinct roots of the chain's first polynomial in `(a, b]`.
fn count_roots(chain: &[Poly], a: &Rational, b: &Rational) -> usize {
    sign_variations(chain, a).saturating_sub(sign_variations(chain, b))
}

fn sign_variations(chain: &[Poly], x: &Rational) -> usize {
    let mut last = 0i8;
    let mut count = 0;
    for p in chain {
        let s = p.sign_at(x);
        if s != 0 {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
    }
    count
}

/// A point just above the root `x` with no other root in between.
fn step_past(chain: &[Poly], x: &Rational, limit: &Rational) -> Rational {
    let mut hi = limit.clone();
    while count_roots(chain, x, &hi) > 0 {
        hi = (x + &hi) / Rational::from_integer(2.into());
    }
    hi
}

/// Location of a polynomial root: exact, or strictly inside `(lower, upper)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootBracket {
    pub lower: Rational,
    pub upper: Rational,
}

impl RootBracket {
    pub fn exact(x: Rational) -> Self {
        RootBracket {
            lower: x.clone(),
            upper: x,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

fn exact_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let root = |n: &BigInt| {
        let r = n.sqrt();
        (&r * &r == *n).then_some(r)
    };
    Some(Rational::new(root(q.numer())?, root(q.denom())?))
}

/// Narrows the single root of the squarefree `sf` in `(lo, hi]`.
fn refine(sf: &Poly, mut lo: Rational, mut hi: Rational, tolerance: &Rational) -> RootBracket {
    if sf.eval(&hi).is_zero() {
        return RootBracket::exact(hi);
    }
    let in_range = |x: &Rational| *x > lo && *x <= hi;
    match sf.degree() {
        Some(1) => {
            return RootBracket::exact(-&sf.coeffs[0] / &sf.coeffs[1]);
        }
        Some(2) => {
            let (c, b, a) = (&sf.coeffs[0], &sf.coeffs[1], &sf.coeffs[2]);
            let disc = b * b - Rational::from_integer(4.into()) * a * c;
            if let Some(sq) = exact_sqrt(&disc) {
                let two_a = Rational::from_integer(2.into()) * a;
                for x in [(-b - &sq) / &two_a, (-b + &sq) / &two_a] {
                    if in_range(&x) {
                        return RootBracket::exact(x);
                    }
                }
            }
        }
        _ => {}
    }
    let s_lo = sf.sign_at(&lo);
    let two = Rational::from_integer(2.into());
    while &hi - &lo > *tolerance {
        let mid = (&lo + &hi) / &two;
        let s = sf.sign_at(&mid);
        if s == 0 {
            return RootBracket::exact(mid);
        }
        if s == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    RootBracket { lower: lo, upper: hi }
}
