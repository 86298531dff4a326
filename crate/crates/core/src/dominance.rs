//! Stochastic, lexicographic and r-discounted dominance between two
//! assignment vectors, judged along one agent's preference order.
//!
//! Everything works on the *ranked difference* `d_l = x_{j_l} - y_{j_l}`,
//! where `j_1, ..., j_m` is the ranking. The discounted partial sums are
//! `Δ_k(r) = Σ_{l ≤ k} r^l d_l`; the adjusted form `δ_k = r^{-k} Δ_k` has the
//! same sign for `r > 0`.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::assign::AssignmentVector;
use crate::poly::Poly;
use crate::prefs::PreferenceOrder;
use crate::rational::{pow, to_canonical, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DominanceError {
    #[error("discount factor {0} is outside (0, 1]")]
    DiscountOutOfRange(String),
    #[error("vectors over {0} and {1} objects cannot be compared along an order over {2}")]
    Dimension(usize, usize, usize),
}

/// Bracket width used when a degree is an irrational root.
pub fn degree_tolerance() -> Rational {
    Rational::new(1.into(), (1u64 << 31).into())
}

fn check_dims(p: &PreferenceOrder, x: &AssignmentVector, y: &AssignmentVector) {
    assert!(
        x.m() == p.m() && y.m() == p.m(),
        "{}",
        DominanceError::Dimension(x.m(), y.m(), p.m())
    );
}

fn check_discount(r: &Rational) -> Result<(), DominanceError> {
    if !r.is_positive() || *r > Rational::one() {
        return Err(DominanceError::DiscountOutOfRange(to_canonical(r)));
    }
    Ok(())
}

/// `x - y` listed along the ranking of `p`.
pub fn ranked_difference(p: &PreferenceOrder, x: &AssignmentVector, y: &AssignmentVector) -> Vec<Rational> {
    check_dims(p, x, y);
    p.ranking().iter().map(|o| x.get(o.0) - y.get(o.0)).collect()
}

/// All prefix sums of `d` are nonnegative.
pub fn sd_ranked(d: &[Rational]) -> bool {
    let mut acc = Rational::zero();
    for v in d {
        acc += v;
        if acc.is_negative() {
            return false;
        }
    }
    true
}

/// The first nonzero entry of `d`, if any, is positive.
pub fn ld_ranked(d: &[Rational]) -> bool {
    d.iter().find(|v| !v.is_zero()).is_none_or(|v| v.is_positive())
}

pub fn sd_dominates(p: &PreferenceOrder, x: &AssignmentVector, y: &AssignmentVector) -> bool {
    sd_ranked(&ranked_difference(p, x, y))
}

pub fn ld_dominates(p: &PreferenceOrder, x: &AssignmentVector, y: &AssignmentVector) -> bool {
    ld_ranked(&ranked_difference(p, x, y))
}

/// Discounted partial sums `Δ_1(r), ..., Δ_m(r)` at a fixed `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaVector {
    r: Rational,
    deltas: Vec<Rational>,
}

impl DeltaVector {
    pub fn from_ranked(d: &[Rational], r: &Rational) -> Result<Self, DominanceError> {
        check_discount(r)?;
        let mut deltas = Vec::with_capacity(d.len());
        let mut acc = Rational::zero();
        let mut power = Rational::one();
        for v in d {
            power *= r;
            acc += &power * v;
            deltas.push(acc.clone());
        }
        Ok(DeltaVector { r: r.clone(), deltas })
    }

    pub fn r(&self) -> &Rational {
        &self.r
    }

    /// `Δ_k` for `k = 1..=m`, at index `k - 1`.
    pub fn deltas(&self) -> &[Rational] {
        &self.deltas
    }

    pub fn get(&self, k: usize) -> &Rational {
        &self.deltas[k - 1]
    }

    /// Adjusted sums `δ_k = r^{-k} Δ_k`.
    pub fn adjusted(&self) -> Vec<Rational> {
        self.deltas
            .iter()
            .enumerate()
            .map(|(k, v)| v * pow(&self.r, -(k as i32 + 1)))
            .collect()
    }

    /// True iff `Δ_k ≥ 0` for `k = 1..m-1`.
    pub fn all_nonnegative(&self) -> bool {
        let m = self.deltas.len();
        self.deltas[..m.saturating_sub(1)].iter().all(|v| !v.is_negative())
    }
}

impl fmt::Display for DeltaVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Δ(r = {}) = (", to_canonical(&self.r))?;
        for (k, v) in self.deltas.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&to_canonical(v))?;
        }
        f.write_str(")")
    }
}

/// Partial sums of `x - y` along `p`, discounted by `r`.
///
/// Panics if the dimensions disagree. When both vectors are lotteries the
/// undiscounted differences telescope to zero, which is asserted.
pub fn delta_partial_sums(
    p: &PreferenceOrder,
    x: &AssignmentVector,
    y: &AssignmentVector,
    r: &Rational,
) -> Result<DeltaVector, DominanceError> {
    let d = ranked_difference(p, x, y);
    let one = Rational::one();
    if x.probs().iter().sum::<Rational>() == one && y.probs().iter().sum::<Rational>() == one {
        assert!(d.iter().sum::<Rational>().is_zero());
    }
    DeltaVector::from_ranked(&d, r)
}

pub fn r_discounted_dominates(
    p: &PreferenceOrder,
    x: &AssignmentVector,
    y: &AssignmentVector,
    r: &Rational,
) -> Result<bool, DominanceError> {
    Ok(delta_partial_sums(p, x, y, r)?.all_nonnegative())
}

/// Same test on a ranked difference.
pub fn r_discounted_ranked(d: &[Rational], r: &Rational) -> Result<bool, DominanceError> {
    Ok(DeltaVector::from_ranked(d, r)?.all_nonnegative())
}

/// A degree of dominance or strategyproofness in `[0, 1]`.
///
/// Either exact (`lower == upper`) or a bracket: the property holds at every
/// `r ≤ lower` and the true supremum lies strictly between the ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeValue {
    lower: Rational,
    upper: Rational,
}

impl DegreeValue {
    pub fn exact(value: Rational) -> Self {
        DegreeValue {
            lower: value.clone(),
            upper: value,
        }
    }

    pub fn bracket(lower: Rational, upper: Rational) -> Self {
        assert!(lower <= upper);
        DegreeValue { lower, upper }
    }

    pub fn one() -> Self {
        Self::exact(Rational::one())
    }

    pub fn zero() -> Self {
        Self::exact(Rational::zero())
    }

    pub fn lower(&self) -> &Rational {
        &self.lower
    }

    pub fn upper(&self) -> &Rational {
        &self.upper
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn exact_value(&self) -> Option<&Rational> {
        self.is_exact().then_some(&self.lower)
    }

    pub fn width(&self) -> Rational {
        &self.upper - &self.lower
    }

    /// Bracket of the minimum of two bracketed values.
    pub fn min(&self, other: &DegreeValue) -> DegreeValue {
        DegreeValue {
            lower: self.lower.clone().min(other.lower.clone()),
            upper: self.upper.clone().min(other.upper.clone()),
        }
    }

    /// Orders by lower end, then upper end.
    pub fn cmp_lower(&self, other: &DegreeValue) -> Ordering {
        self.lower.cmp(&other.lower).then_with(|| self.upper.cmp(&other.upper))
    }
}

impl fmt::Display for DegreeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            f.write_str(&to_canonical(&self.lower))
        } else {
            write!(f, "[{}, {}]", to_canonical(&self.lower), to_canonical(&self.upper))
        }
    }
}

impl Serialize for DegreeValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_exact() {
            s.serialize_str(&to_canonical(&self.lower))
        } else {
            let mut st = s.serialize_struct("DegreeValue", 2)?;
            st.serialize_field("lower", &to_canonical(&self.lower))?;
            st.serialize_field("upper", &to_canonical(&self.upper))?;
            st.end()
        }
    }
}

/// Largest `r` such that discounted dominance holds at every `r' ∈ (0, r]`.
pub fn max_dominance_degree(p: &PreferenceOrder, x: &AssignmentVector, y: &AssignmentVector) -> DegreeValue {
    degree_of_ranked(&ranked_difference(p, x, y))
}

/// [`max_dominance_degree`] on a ranked difference.
///
/// For each `k`, `Δ_k(r) / r^j` is a polynomial whose sign near zero is the
/// sign of its lowest nonzero coefficient. The admissible set ends at the
/// first point in `(0, 1)` where one of these polynomials changes sign.
pub fn degree_of_ranked(d: &[Rational]) -> DegreeValue {
    if sd_ranked(d) {
        return DegreeValue::one();
    }
    if !ld_ranked(d) {
        return DegreeValue::zero();
    }
    let tolerance = degree_tolerance();
    let mut best = DegreeValue::one();
    let m = d.len();
    for k in 1..m {
        let prefix = &d[..k];
        let Some(first) = prefix.iter().position(|v| !v.is_zero()) else {
            continue;
        };
        let poly = Poly::new(prefix[first..].to_vec());
        if poly.coeffs()[0].is_negative() {
            return DegreeValue::zero();
        }
        if let Some(root) = poly.first_sign_change_in_unit(&tolerance) {
            let candidate = DegreeValue {
                lower: root.lower,
                upper: root.upper,
            };
            best = best.min(&candidate);
        }
    }
    best
}
