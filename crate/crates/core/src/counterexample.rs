//! A single-agent, four-object mechanism family `φ(s, α)` whose local degree
//! of partial strategyproofness is `1/s` while its global degree falls below
//! `(1/s)^{2-ε}`.
//!
//! Objects are `a, b, c, d` (indices 0 to 3). With `β = sα`,
//! `γ_c = (1-α) / ((s-1)(s² + s - 1))` and `γ_d = s(s+1)(1-α) / (s² + s - 1)`
//! the report determines the assignment by six patterns:
//!
//! | report                  | assignment `(a, b, c, d)`    |
//! |-------------------------|------------------------------|
//! | `a ≻ …`                 | `(α, 0, 0, 1-α)`             |
//! | `b ≻ …`                 | `(0, β, 0, 1-β)`             |
//! | `d ≻ …`                 | `(0, 0, 0, 1)`               |
//! | `c ≻ d ≻ …`             | `(0, 0, γ_c, 1-γ_c)`         |
//! | `c ≻ a ≻ d ≻ b`         | `(1-γ_c-γ_d, 0, γ_c, γ_d)`   |
//! | `c ≻ b ≻ …`, `c ≻ a ≻ b ≻ d` | `(1-γ_c-γ_d, γ_d, γ_c, 0)` |

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::analysis::{Analyzer, CheckOutcome};
use crate::assign::{
    expected_utility, AssignError, AssignmentMatrix, AssignmentVector, Setting, TabulatedMechanism, UtilityFunction,
};
use crate::dominance::{ranked_difference, sd_dominates, DeltaVector};
use crate::geometry::geometric_utility;
use crate::interval::{rational_power, Interval, IntervalSign};
use crate::prefs::{all_preference_orders, neighborhood, PreferenceOrder, PreferenceProfile};
use crate::rational::{int, to_canonical, Rational};

#[derive(Debug, Error)]
pub enum CounterexampleError {
    #[error("s must exceed 1 (got {0})")]
    BaseRange(String),
    #[error("alpha must lie in [0, 1] (got {0})")]
    AlphaRange(String),
    #[error(
        "alpha = {alpha} is infeasible: rows are distributions only for alpha in [{lo}, {hi}] = [s/(s^3-s+1), 1/s]"
    )]
    Infeasible { alpha: String, lo: String, hi: String },
    #[error("epsilon must lie in (0, 2) (got {0})")]
    EpsilonRange(String),
    #[error("no witness found for s up to {budget}; last scanned s = {last_s}")]
    Budget { budget: String, last_s: String },
    #[error("cross-check failed: {0}")]
    CrossCheck(String),
    #[error(transparent)]
    Assign(#[from] AssignError),
}

type Result<T> = std::result::Result<T, CounterexampleError>;

/// Parameters `(s, α)` with the derived quantities `β, γ_c, γ_d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiParams {
    s: Rational,
    alpha: Rational,
    beta: Rational,
    gamma_c: Rational,
    gamma_d: Rational,
}

impl PhiParams {
    pub fn new(s: Rational, alpha: Rational) -> Result<Self> {
        check_base(&s)?;
        if alpha.is_negative() || alpha > Rational::one() {
            return Err(CounterexampleError::AlphaRange(to_canonical(&alpha)));
        }
        let one = Rational::one();
        let e = &s * &s + &s - &one;
        let beta = &s * &alpha;
        let gamma_c = (&one - &alpha) / ((&s - &one) * &e);
        let gamma_d = &s * (&s + &one) * (&one - &alpha) / &e;
        Ok(PhiParams {
            s,
            alpha,
            beta,
            gamma_c,
            gamma_d,
        })
    }

    pub fn s(&self) -> &Rational {
        &self.s
    }

    /// The discount factor `1/s`.
    pub fn r(&self) -> Rational {
        self.s.recip()
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn beta(&self) -> &Rational {
        &self.beta
    }

    pub fn gamma_c(&self) -> &Rational {
        &self.gamma_c
    }

    pub fn gamma_d(&self) -> &Rational {
        &self.gamma_d
    }
}

impl Serialize for PhiParams {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = ser.serialize_struct("PhiParams", 5)?;
        st.serialize_field("s", &to_canonical(&self.s))?;
        st.serialize_field("alpha", &to_canonical(&self.alpha))?;
        st.serialize_field("beta", &to_canonical(&self.beta))?;
        st.serialize_field("gamma_c", &to_canonical(&self.gamma_c))?;
        st.serialize_field("gamma_d", &to_canonical(&self.gamma_d))?;
        st.end()
    }
}

fn check_base(s: &Rational) -> Result<()> {
    if *s <= Rational::one() {
        return Err(CounterexampleError::BaseRange(to_canonical(s)));
    }
    Ok(())
}

/// The six report patterns that determine the assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RowPattern {
    /// `a ≻ …`
    A,
    /// `b ≻ …`
    B,
    /// `d ≻ …`
    D,
    /// `c ≻ d ≻ …`
    CD,
    /// `c ≻ a ≻ d ≻ b`
    CADB,
    /// `c ≻ b ≻ …` or `c ≻ a ≻ b ≻ d`
    CB,
}

const OBJ_A: usize = 0;
const OBJ_B: usize = 1;
const OBJ_C: usize = 2;
const OBJ_D: usize = 3;

pub fn row_pattern(order: &PreferenceOrder) -> RowPattern {
    let r: Vec<usize> = order.ranking().iter().map(|o| o.0).collect();
    match r[0] {
        OBJ_A => RowPattern::A,
        OBJ_B => RowPattern::B,
        OBJ_D => RowPattern::D,
        _ => match (r[1], r[2]) {
            (OBJ_D, _) => RowPattern::CD,
            (OBJ_A, OBJ_D) => RowPattern::CADB,
            _ => RowPattern::CB,
        },
    }
}

/// The assignment for `order`, computed from the formulas whether or not
/// the parameters are feasible.
pub fn phi_row(p: &PhiParams, order: &PreferenceOrder) -> AssignmentVector {
    let one = Rational::one();
    let zero = Rational::zero();
    let (g, h) = (&p.gamma_c, &p.gamma_d);
    let probs = match row_pattern(order) {
        RowPattern::A => vec![p.alpha.clone(), zero.clone(), zero.clone(), &one - &p.alpha],
        RowPattern::B => vec![zero.clone(), p.beta.clone(), zero.clone(), &one - &p.beta],
        RowPattern::D => vec![zero.clone(), zero.clone(), zero.clone(), one.clone()],
        RowPattern::CD => vec![zero.clone(), zero.clone(), g.clone(), &one - g],
        RowPattern::CADB => vec![&one - g - h, zero.clone(), g.clone(), h.clone()],
        RowPattern::CB => vec![&one - g - h, h.clone(), g.clone(), zero.clone()],
    };
    AssignmentVector::new_unchecked(probs)
}

/// A closed rational interval, possibly empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalRange {
    pub lo: Rational,
    pub hi: Rational,
}

impl RationalRange {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        RationalRange { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn is_subset_of(&self, other: &RationalRange) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

impl fmt::Display for RationalRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", to_canonical(&self.lo), to_canonical(&self.hi))
    }
}

impl Serialize for RationalRange {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        [to_canonical(&self.lo), to_canonical(&self.hi)].serialize(ser)
    }
}

/// `[s/(s³-s+1), 1/s]`: the `α` for which every row is a distribution.
pub fn feasibility_interval(s: &Rational) -> Result<RationalRange> {
    check_base(s)?;
    let one = Rational::one();
    Ok(RationalRange::new(s / (s * s * s - s + &one), s.recip()))
}

/// Builds the single-agent mechanism over objects `a, b, c, d`.
pub fn build_phi(p: &PhiParams) -> Result<TabulatedMechanism> {
    let feasible = feasibility_interval(&p.s)?;
    if !feasible.contains(&p.alpha) {
        return Err(CounterexampleError::Infeasible {
            alpha: to_canonical(&p.alpha),
            lo: to_canonical(&feasible.lo),
            hi: to_canonical(&feasible.hi),
        });
    }
    let setting = Setting::new(1, 4, vec![1, 1, 1, 1])?;
    Ok(TabulatedMechanism::build_default(
        setting,
        |profile: &PreferenceProfile| Ok(AssignmentMatrix::new(vec![phi_row(p, profile.order(0))])),
    )?)
}

/// Labels of the local manipulations that change the assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Case {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
    IX,
    /// `c ≻ d ≻ a ≻ b` against `c ≻ a ≻ d ≻ b`; its bound coincides with
    /// the lower feasibility bound.
    X,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Case {
    /// Cases in which one assignment stochastically dominates the other.
    pub fn is_dominance_case(self) -> bool {
        matches!(self, Case::II | Case::V | Case::VII)
    }
}

pub fn case_of(truth: &PreferenceOrder, misreport: &PreferenceOrder) -> Option<Case> {
    use RowPattern::*;
    let (x, y) = (row_pattern(truth), row_pattern(misreport));
    let pair = |p: RowPattern, q: RowPattern| (x == p && y == q) || (x == q && y == p);
    if x == y {
        None
    } else if pair(A, B) {
        Some(Case::I)
    } else if pair(A, D) {
        Some(Case::II)
    } else if pair(A, CADB) {
        Some(Case::III)
    } else if pair(A, CB) {
        Some(Case::IV)
    } else if pair(B, D) {
        Some(Case::V)
    } else if pair(B, CB) {
        Some(Case::VI)
    } else if pair(D, CD) {
        Some(Case::VII)
    } else if pair(CD, CB) {
        Some(Case::VIII)
    } else if pair(CADB, CB) {
        Some(Case::IX)
    } else if pair(CD, CADB) {
        Some(Case::X)
    } else {
        None
    }
}

/// Adjusted partial sums `δ_1, δ_2, δ_3` at `r = 1/s`, from the rows.
pub fn adjusted_deltas(p: &PhiParams, truth: &PreferenceOrder, misreport: &PreferenceOrder) -> Vec<Rational> {
    let d = ranked_difference(truth, &phi_row(p, truth), &phi_row(p, misreport));
    let mut v = DeltaVector::from_ranked(&d, &p.r())
        .expect("1/s lies in (0, 1)")
        .adjusted();
    v.truncate(3);
    v
}

/// Hand-derived closed forms of `δ_1, δ_2, δ_3` for every local
/// manipulation outside the dominance cases.
pub fn closed_form_deltas(
    p: &PhiParams,
    truth: &PreferenceOrder,
    misreport: &PreferenceOrder,
) -> Option<[Rational; 3]> {
    use RowPattern::*;
    let s = &p.s;
    let al = &p.alpha;
    let be = &p.beta;
    let g = &p.gamma_c;
    let h = &p.gamma_d;
    let one = Rational::one();
    let zero = Rational::zero();
    let e = s * s + s - &one;
    let third = truth.object_at(2).0;
    let w = &one - g - h;
    let lead = al - &w;
    Some(match (row_pattern(truth), row_pattern(misreport)) {
        (A, B) => [
            al.clone(),
            zero.clone(),
            if third == OBJ_D { be - al } else { zero.clone() },
        ],
        (B, A) => [
            be.clone(),
            al * (s * s - &one),
            if third == OBJ_D {
                al * (s * s * s - int(2) * s + &one)
            } else {
                al * (s * s - &one) * s
            },
        ],
        (A, CADB) => [lead.clone(), s * &lead - g, &one - al],
        (CADB, A) => [g.clone(), zero.clone(), (&one - al) / &e],
        (A, CB) => [lead.clone(), s * &lead - g, zero.clone()],
        (CB, A) => [g.clone(), zero.clone(), h.clone()],
        (B, CB) => {
            let d1 = be - h;
            let d2 = s * &d1 - g;
            let d3 = if third == OBJ_A {
                s * &d2 - &w
            } else {
                s * &d2 + &one - be
            };
            [d1, d2, d3]
        }
        (CB, B) => {
            let d1 = g.clone();
            let d2 = s * g + h - be;
            let d3 = if third == OBJ_D {
                s * s * g + s * (h - be) - (&one - be)
            } else {
                s * s * g + s * (h - be) + &w
            };
            [d1, d2, d3]
        }
        (CD, CB) => [zero.clone(), &one - g, s * (&one - g) - h],
        (CB, CD) => [zero.clone(), h.clone(), s * h - (&one - g)],
        (CADB, CB) | (CB, CADB) => [zero.clone(), zero.clone(), h.clone()],
        (CD, CADB) | (CADB, CD) => [zero.clone(), w.clone(), (s - &one) * &w],
        _ => return None,
    })
}

/// One local manipulation with its machinery and closed-form sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseCheck {
    pub case: Case,
    pub truth: PreferenceOrder,
    pub misreport: PreferenceOrder,
    pub deltas: Vec<Rational>,
    pub closed_form: Option<Vec<Rational>>,
    /// For the dominance cases: whether the truthful row stochastically
    /// dominates the misreport's.
    pub sd: Option<bool>,
    pub agree: bool,
    pub nonnegative: bool,
}

impl Serialize for CaseCheck {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = ser.serialize_struct("CaseCheck", 8)?;
        st.serialize_field("case", &self.case.to_string())?;
        st.serialize_field("truth", &self.truth.to_string())?;
        st.serialize_field("misreport", &self.misreport.to_string())?;
        let canon = |v: &Vec<Rational>| v.iter().map(to_canonical).collect::<Vec<_>>();
        st.serialize_field("deltas", &canon(&self.deltas))?;
        st.serialize_field("closed_form", &self.closed_form.as_ref().map(canon))?;
        st.serialize_field("sd", &self.sd)?;
        st.serialize_field("agree", &self.agree)?;
        st.serialize_field("nonnegative", &self.nonnegative)?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalPspReport {
    pub params: PhiParams,
    /// Exhaustive local check at `r = 1/s`.
    pub local: CheckOutcome,
    pub cases: Vec<CaseCheck>,
}

impl LocalPspReport {
    pub fn holds(&self) -> bool {
        self.local.holds
    }
}

/// Exhaustive local check at `r = 1/s`, cross-checked case by case against
/// the closed forms.
pub fn verify_local_psp(p: &PhiParams) -> Result<LocalPspReport> {
    let mech = build_phi(p)?;
    let local = Analyzer::new(&mech)
        .check_r_psp(&p.r(), true)
        .expect("1/s lies in (0, 1)");
    let mut cases = Vec::new();
    for truth in all_preference_orders(4).expect("four objects") {
        for mis in neighborhood(&truth) {
            let Some(case) = case_of(&truth, &mis) else {
                continue;
            };
            let deltas = adjusted_deltas(p, &truth, &mis);
            let nonnegative = deltas.iter().all(|v| !v.is_negative());
            let (closed_form, sd, agree) = if case.is_dominance_case() {
                let sd = sd_dominates(&truth, &phi_row(p, &truth), &phi_row(p, &mis));
                (None, Some(sd), sd == nonnegative)
            } else {
                let cf = closed_form_deltas(p, &truth, &mis).map(|a| a.to_vec());
                let agree = cf.as_ref() == Some(&deltas);
                (cf, None, agree)
            };
            if !agree {
                return Err(CounterexampleError::CrossCheck(format!(
                    "case {case}, {truth} -> {mis}: machinery {:?} vs closed form {:?}",
                    deltas.iter().map(to_canonical).collect::<Vec<_>>(),
                    closed_form
                        .as_ref()
                        .map(|v| v.iter().map(to_canonical).collect::<Vec<_>>()),
                )));
            }
            cases.push(CaseCheck {
                case,
                truth: truth.clone(),
                misreport: mis,
                deltas,
                closed_form,
                sd,
                agree,
                nonnegative,
            });
        }
    }
    let by_cases = cases.iter().all(|c| c.nonnegative);
    if by_cases != local.holds {
        return Err(CounterexampleError::CrossCheck(format!(
            "case analysis says {by_cases}, exhaustive check says {}",
            local.holds
        )));
    }
    Ok(LocalPspReport {
        params: p.clone(),
        local,
        cases,
    })
}

/// What a single constraint `δ_k ≥ 0` says about `α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bound {
    Lower(Rational),
    Upper(Rational),
    Always,
    Never,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalConstraint {
    pub case: Option<Case>,
    pub truth: PreferenceOrder,
    pub misreport: PreferenceOrder,
    /// Which partial sum, `1..=3`.
    pub k: usize,
    pub bound: Bound,
}

impl Serialize for LocalConstraint {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = ser.serialize_struct("LocalConstraint", 5)?;
        st.serialize_field("case", &self.case.map(|c| c.to_string()))?;
        st.serialize_field("truth", &self.truth.to_string())?;
        st.serialize_field("misreport", &self.misreport.to_string())?;
        st.serialize_field("k", &self.k)?;
        let (kind, value) = match &self.bound {
            Bound::Lower(v) => ("lower", Some(to_canonical(v))),
            Bound::Upper(v) => ("upper", Some(to_canonical(v))),
            Bound::Always => ("always", None),
            Bound::Never => ("never", None),
        };
        st.serialize_field("kind", kind)?;
        st.serialize_field("value", &value)?;
        st.end()
    }
}

/// The set of `α` for which `φ(s, α)` is `1/s`-locally partially
/// strategyproof, with every constraint that went into it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalInterval {
    pub s: String,
    pub interval: RationalRange,
    pub feasibility: RationalRange,
    pub constraints: Vec<LocalConstraint>,
    /// Index into `constraints` of the binding lower bound, if one is
    /// tighter than feasibility.
    pub lower_binding: Option<usize>,
    pub upper_binding: Option<usize>,
    pub closed_form: RationalRange,
    pub matches_closed_form: bool,
}

/// The widely quoted closed-form local interval
/// `[(s⁴-s³)/(s⁵+2s⁴-s²-s-1), (s³-s+s²/(s-1)+1)/(s⁴+s³-s²+s+s²/(s-1))]`.
///
/// Its upper end is the binding upper bound for every `s > 1`. Its lower end
/// lies strictly below the binding lower bound, so it overstates the interval.
pub fn closed_form_local_interval(s: &Rational) -> Result<RationalRange> {
    check_base(s)?;
    let one = Rational::one();
    let s2 = s * s;
    let s3 = &s2 * s;
    let s4 = &s3 * s;
    let s5 = &s4 * s;
    let lo = (&s4 - &s3) / (&s5 + int(2) * &s4 - &s2 - s - &one);
    let frac = &s2 / (s - &one);
    let hi = (&s3 - s + &frac + &one) / (&s4 + &s3 - &s2 + s + &frac);
    Ok(RationalRange::new(lo, hi))
}

/// Intersects the feasibility interval with every bound from every local
/// manipulation. Each `δ_k` is affine in `α`, so two evaluations fix it.
pub fn local_psp_interval(s: &Rational) -> Result<LocalInterval> {
    let feasibility = feasibility_interval(s)?;
    let at0 = PhiParams::new(s.clone(), Rational::zero())?;
    let at1 = PhiParams::new(s.clone(), Rational::one())?;
    let mut constraints = Vec::new();
    let mut interval = feasibility.clone();
    let mut lower_binding = None;
    let mut upper_binding = None;
    let mut empty = false;
    for truth in all_preference_orders(4).expect("four objects") {
        for mis in neighborhood(&truth) {
            let d0 = adjusted_deltas(&at0, &truth, &mis);
            let d1 = adjusted_deltas(&at1, &truth, &mis);
            for k in 0..3 {
                let a0 = &d0[k];
                let slope = &d1[k] - a0;
                let bound = if slope.is_zero() {
                    if a0.is_negative() {
                        Bound::Never
                    } else {
                        continue;
                    }
                } else if slope.is_positive() {
                    Bound::Lower(-a0 / &slope)
                } else {
                    Bound::Upper(-a0 / &slope)
                };
                let idx = constraints.len();
                match &bound {
                    Bound::Lower(v) if *v > interval.lo => {
                        interval.lo = v.clone();
                        lower_binding = Some(idx);
                    }
                    Bound::Upper(v) if *v < interval.hi => {
                        interval.hi = v.clone();
                        upper_binding = Some(idx);
                    }
                    Bound::Never => empty = true,
                    _ => {}
                }
                constraints.push(LocalConstraint {
                    case: case_of(&truth, &mis),
                    truth: truth.clone(),
                    misreport: mis.clone(),
                    k: k + 1,
                    bound,
                });
            }
        }
    }
    if empty {
        interval = RationalRange::new(Rational::one(), Rational::zero());
    }
    let closed_form = closed_form_local_interval(s)?;
    let matches_closed_form = closed_form == interval;
    Ok(LocalInterval {
        s: to_canonical(s),
        interval,
        feasibility,
        constraints,
        lower_binding,
        upper_binding,
        closed_form,
        matches_closed_form,
    })
}

/// Sign evidence for `Δ_3` of the non-local manipulation
/// `a ≻ b ≻ c ≻ d → c ≻ a ≻ b ≻ d` at the irrational discount `s^{-(2-ε)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delta3Evidence {
    pub s: Rational,
    pub alpha: Rational,
    pub epsilon: Rational,
    /// Bits of the root approximations.
    pub bits: u32,
    /// Enclosure of `r̃ = s^{-(2-ε)}`.
    pub discount: Interval,
    /// `Δ_3(r̃)` evaluated from the mechanism's rows.
    pub delta3: Interval,
    /// `(1-α)(-s^{5-ε} + s^{5-2ε} + s^{3-ε} - 1) / (s³ - 2s + 1)`, which
    /// equals `s̃³ Δ_3(r̃)` for `s̃ = 1/r̃`.
    pub closed_form: Interval,
    pub sign: IntervalSign,
}

impl Serialize for Delta3Evidence {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        const DIGITS: usize = 30;
        let dec = |i: &Interval| {
            let (lo, hi) = i.to_decimal_string(DIGITS);
            [lo, hi]
        };
        let mut st = ser.serialize_struct("Delta3Evidence", 9)?;
        st.serialize_field("s", &to_canonical(&self.s))?;
        st.serialize_field("alpha", &to_canonical(&self.alpha))?;
        st.serialize_field("epsilon", &to_canonical(&self.epsilon))?;
        st.serialize_field("bits", &self.bits)?;
        st.serialize_field("decimal_digits", &DIGITS)?;
        st.serialize_field("discount", &dec(&self.discount))?;
        st.serialize_field("delta3", &dec(&self.delta3))?;
        st.serialize_field("closed_form", &dec(&self.closed_form))?;
        st.serialize_field("sign", &self.sign)?;
        st.end()
    }
}

fn check_epsilon(epsilon: &Rational) -> Result<()> {
    if !epsilon.is_positive() || *epsilon >= int(2) {
        return Err(CounterexampleError::EpsilonRange(to_canonical(epsilon)));
    }
    Ok(())
}

/// Encloses `Δ_3` two ways and checks the enclosures overlap. The sign is
/// `Indeterminate` when `bits` is too small to separate it from zero.
pub fn nonlocal_delta3(s: &Rational, alpha: &Rational, epsilon: &Rational, bits: u32) -> Result<Delta3Evidence> {
    check_epsilon(epsilon)?;
    let p = PhiParams::new(s.clone(), alpha.clone())?;
    let mech = build_phi(&p)?;
    let truth = PreferenceOrder::from_indices(&[OBJ_A, OBJ_B, OBJ_C, OBJ_D]).expect("permutation");
    let mis = PreferenceOrder::from_indices(&[OBJ_C, OBJ_A, OBJ_B, OBJ_D]).expect("permutation");
    let profile = |o: &PreferenceOrder| PreferenceProfile::new(vec![o.clone()]).expect("one agent");
    let x = mech.assignment_of(&profile(&truth), 0)?;
    let y = mech.assignment_of(&profile(&mis), 0)?;
    let d = ranked_difference(&truth, x, y);

    let two = int(2);
    let rt = rational_power(s, &-(&two - epsilon), bits);
    let mut delta3 = Interval::point(Rational::zero());
    let mut power = Interval::point(Rational::one());
    for dl in &d[..3] {
        power = power.mul(&rt);
        delta3 = delta3.add(&power.scale(dl));
    }

    let one = Rational::one();
    let five = int(5);
    let three = int(3);
    let t1 = rational_power(s, &(&five - epsilon), bits);
    let t2 = rational_power(s, &(&five - &two * epsilon), bits);
    let t3 = rational_power(s, &(&three - epsilon), bits);
    let poly = t2.add(&t3).sub(&t1).sub(&Interval::point(one.clone()));
    let denom = s * s * s - &two * s + &one;
    let closed_form = poly.scale(&((&one - alpha) / denom));

    let st = rational_power(s, &(&two - epsilon), bits);
    let scaled = delta3.mul(&st.mul(&st).mul(&st));
    if !scaled.overlaps(&closed_form) {
        return Err(CounterexampleError::CrossCheck(format!(
            "direct enclosure {scaled} and closed form {closed_form} are disjoint"
        )));
    }
    let sign = match (delta3.sign(), closed_form.sign()) {
        (a, b) if a == b => a,
        (IntervalSign::Indeterminate, b) => b,
        (a, IntervalSign::Indeterminate) => a,
        (a, b) => {
            return Err(CounterexampleError::CrossCheck(format!(
                "sign {a:?} of the direct enclosure contradicts {b:?}"
            )))
        }
    };
    Ok(Delta3Evidence {
        s: s.clone(),
        alpha: alpha.clone(),
        epsilon: epsilon.clone(),
        bits,
        discount: rt,
        delta3,
        closed_form,
        sign,
    })
}

/// Evidence that `φ(s, α)` is `1/s`-locally partially strategyproof but not
/// `(1/s)^{2-ε}`-partially strategyproof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessCertificate {
    pub epsilon: Rational,
    pub params: PhiParams,
    pub local_interval: RationalRange,
    pub local_check: CheckOutcome,
    pub delta3: Delta3Evidence,
    pub truthful: PreferenceOrder,
    pub misreport: PreferenceOrder,
    /// Rational `q ≤ s^{-(2-ε)}`; the violating utility is geometric with ratio `q`.
    pub utility_ratio: Rational,
    pub utility: UtilityFunction,
    /// Expected utility of misreporting minus that of reporting truthfully.
    pub gain: Rational,
    /// Every `s` examined, in order.
    pub scanned: Vec<Rational>,
}

impl Serialize for WitnessCertificate {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = ser.serialize_struct("WitnessCertificate", 11)?;
        st.serialize_field("epsilon", &to_canonical(&self.epsilon))?;
        st.serialize_field("params", &self.params)?;
        st.serialize_field("local_interval", &self.local_interval)?;
        st.serialize_field("local_check", &self.local_check)?;
        st.serialize_field("delta3", &self.delta3)?;
        st.serialize_field("truthful", &self.truthful.to_string())?;
        st.serialize_field("misreport", &self.misreport.to_string())?;
        st.serialize_field("utility_ratio", &to_canonical(&self.utility_ratio))?;
        let u: Vec<String> = self.utility.values().iter().map(to_canonical).collect();
        st.serialize_field("utility", &u)?;
        st.serialize_field("gain", &to_canonical(&self.gain))?;
        let scanned: Vec<String> = self.scanned.iter().map(to_canonical).collect();
        st.serialize_field("scanned", &scanned)?;
        st.end()
    }
}

/// Default largest `s` examined by [`find_witness`].
pub fn default_witness_budget() -> Rational {
    int(1_000_000)
}

const BITS_SCHEDULE: [u32; 5] = [64, 128, 256, 512, 1024];

/// Scans `s = 2, 4, 8, …` up to `budget` for the first `s` at which the
/// local interval is nonempty and `Δ_3` at its midpoint is provably negative.
pub fn find_witness(epsilon: &Rational, budget: &Rational) -> Result<WitnessCertificate> {
    check_epsilon(epsilon)?;
    let mut s = int(2);
    let mut scanned = Vec::new();
    while s <= *budget {
        scanned.push(s.clone());
        if let Some(cert) = witness_at(epsilon, &s, &scanned)? {
            return Ok(cert);
        }
        s *= int(2);
    }
    Err(CounterexampleError::Budget {
        budget: to_canonical(budget),
        last_s: scanned.last().map(to_canonical).unwrap_or_default(),
    })
}

fn witness_at(epsilon: &Rational, s: &Rational, scanned: &[Rational]) -> Result<Option<WitnessCertificate>> {
    let local = local_psp_interval(s)?;
    if local.interval.is_empty() {
        return Ok(None);
    }
    let alpha = local.interval.midpoint();
    let params = PhiParams::new(s.clone(), alpha.clone())?;
    for bits in BITS_SCHEDULE {
        let ev = nonlocal_delta3(s, &alpha, epsilon, bits)?;
        match ev.sign {
            IntervalSign::Indeterminate => continue,
            IntervalSign::Negative => {}
            _ => return Ok(None),
        }
        let mech = build_phi(&params)?;
        let local_check = Analyzer::new(&mech)
            .check_r_psp(&params.r(), true)
            .expect("1/s lies in (0, 1)");
        if !local_check.holds {
            return Err(CounterexampleError::CrossCheck(format!(
                "alpha = {} lies in the local interval but the exhaustive local check fails",
                to_canonical(&alpha)
            )));
        }
        let truthful = PreferenceOrder::from_indices(&[OBJ_A, OBJ_B, OBJ_C, OBJ_D]).expect("permutation");
        let misreport = PreferenceOrder::from_indices(&[OBJ_C, OBJ_A, OBJ_B, OBJ_D]).expect("permutation");
        let q = ev.discount.lo().clone();
        let utility = geometric_utility(&truthful, &q).expect("ratio in (0, 1)");
        let gain = expected_utility(&utility, &phi_row(&params, &misreport))
            - expected_utility(&utility, &phi_row(&params, &truthful));
        if !gain.is_positive() {
            continue;
        }
        return Ok(Some(WitnessCertificate {
            epsilon: epsilon.clone(),
            params,
            local_interval: local.interval,
            local_check,
            delta3: ev,
            truthful,
            misreport,
            utility_ratio: q,
            utility,
            gain,
            scanned: scanned.to_vec(),
        }));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::validate_matrix;
    use crate::rational::ratio;

    fn order(text: &str) -> PreferenceOrder {
        PreferenceOrder::parse_default(text).unwrap()
    }

    #[test]
    fn derived_quantities() {
        let p = PhiParams::new(int(10), ratio(2, 25)).unwrap();
        assert_eq!(p.beta(), &ratio(4, 5));
        assert_eq!(p.gamma_c(), &ratio(23, 24525));
        assert_eq!(p.gamma_d(), &ratio(506, 545));
    }

    #[test]
    fn pattern_counts() {
        let mut counts = std::collections::HashMap::new();
        for o in all_preference_orders(4).unwrap() {
            *counts.entry(row_pattern(&o)).or_insert(0) += 1;
        }
        assert_eq!(counts[&RowPattern::A], 6);
        assert_eq!(counts[&RowPattern::B], 6);
        assert_eq!(counts[&RowPattern::D], 6);
        assert_eq!(counts[&RowPattern::CD], 2);
        assert_eq!(counts[&RowPattern::CADB], 1);
        assert_eq!(counts[&RowPattern::CB], 3);
        assert_eq!(row_pattern(&order("c>a>b>d")), RowPattern::CB);
    }

    #[test]
    fn feasibility_endpoints() {
        assert_eq!(
            feasibility_interval(&int(10)).unwrap(),
            RationalRange::new(ratio(10, 991), ratio(1, 10))
        );
        assert_eq!(
            feasibility_interval(&int(2)).unwrap(),
            RationalRange::new(ratio(2, 7), ratio(1, 2))
        );
        assert!(feasibility_interval(&int(1)).is_err());
    }

    #[test]
    fn build_phi_validity_matches_feasibility() {
        for s in [int(2), int(5), int(10)] {
            let f = feasibility_interval(&s).unwrap();
            let eps = ratio(1, 100_000);
            for alpha in [&f.lo - &eps, f.lo.clone(), f.midpoint(), f.hi.clone(), &f.hi + &eps] {
                let p = PhiParams::new(s.clone(), alpha.clone()).unwrap();
                let valid = all_preference_orders(4).unwrap().iter().all(|o| {
                    let m = AssignmentMatrix::new(vec![phi_row(&p, o)]);
                    validate_matrix(&m, &Setting::new(1, 4, vec![1; 4]).unwrap())
                        .unwrap()
                        .is_feasible()
                });
                assert_eq!(valid, f.contains(&alpha), "s = {s}, alpha = {alpha}");
                assert_eq!(build_phi(&p).is_ok(), valid);
            }
        }
    }

    #[test]
    fn d_first_row() {
        let p = PhiParams::new(int(10), ratio(1, 11)).unwrap();
        let mech = build_phi(&p).unwrap();
        let prof = PreferenceProfile::new(vec![order("d>c>b>a")]).unwrap();
        assert_eq!(
            mech.assignment_of(&prof, 0).unwrap().probs(),
            &[int(0), int(0), int(0), int(1)]
        );
    }

    #[test]
    fn local_interval_at_ten() {
        let li = local_psp_interval(&int(10)).unwrap();
        assert_eq!(
            li.interval,
            RationalRange::new(ratio(11000, 119891), ratio(9019, 98290))
        );
        assert_eq!(
            li.closed_form,
            RationalRange::new(ratio(9000, 119889), ratio(9019, 98290))
        );
        assert!(!li.matches_closed_form);
        let lower = &li.constraints[li.lower_binding.unwrap()];
        assert_eq!(
            (lower.case, lower.truth.to_string(), lower.k),
            (Some(Case::VI), "b>c>a>d".into(), 3)
        );
        let upper = &li.constraints[li.upper_binding.unwrap()];
        assert_eq!(
            (upper.case, upper.truth.to_string(), upper.k),
            (Some(Case::VI), "c>b>d>a".into(), 3)
        );
    }

    #[test]
    fn local_check_matches_interval() {
        let s = int(10);
        let li = local_psp_interval(&s).unwrap();
        let f = li.feasibility.clone();
        let mut alphas: Vec<Rational> = (0..=10).map(|k| &f.lo + f.width() * ratio(k, 10)).collect();
        alphas.extend([li.interval.lo.clone(), li.interval.hi.clone(), li.interval.midpoint()]);
        for alpha in alphas {
            let report = verify_local_psp(&PhiParams::new(s.clone(), alpha.clone()).unwrap()).unwrap();
            assert_eq!(report.holds(), li.interval.contains(&alpha), "alpha = {alpha}");
        }
    }

    #[test]
    fn delta3_exact_when_epsilon_is_one() {
        let li = local_psp_interval(&int(10)).unwrap();
        let alpha = li.interval.midpoint();
        let ev = nonlocal_delta3(&int(10), &alpha, &int(1), 64).unwrap();
        assert!(ev.delta3.is_point() && ev.closed_form.is_point());
        assert_eq!(ev.sign, IntervalSign::Negative);
        // (1-α)(-10^4 + 10^3 + 10^2 - 1)/(10^3 - 19)
        let expected = (int(1) - &alpha) * int(-8901) / int(981);
        assert_eq!(ev.closed_form.lo(), &expected);
    }

    #[test]
    fn delta3_half_epsilon() {
        let li = local_psp_interval(&int(10)).unwrap();
        let ev = nonlocal_delta3(&int(10), &li.interval.midpoint(), &ratio(1, 2), 64).unwrap();
        assert_eq!(ev.sign, IntervalSign::Negative);
        assert!(!ev.delta3.is_point());
    }

    #[test]
    fn witness_for_unit_epsilon() {
        let cert = find_witness(&int(1), &default_witness_budget()).unwrap();
        assert_eq!(cert.params.s(), &int(2));
        assert!(cert.gain.is_positive());
        assert!(cert.local_check.holds);
    }

    #[test]
    fn witness_budget_error() {
        assert!(matches!(
            find_witness(&ratio(1, 1000), &int(4)),
            Err(CounterexampleError::Budget { .. })
        ));
        assert!(find_witness(&int(2), &int(4)).is_err());
    }
}
