//! Utility functions as points: bounded indifference, straight paths between
//! two utility functions, and the orders such a path passes through.
//!
//! A path `co(u, v)` is parameterized by `α ∈ [0, 1]` with
//! `u_α(j) = (1 - α) u(j) + α v(j)`. All times are exact rationals.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::assign::{AssignError, UtilityFunction};
use crate::prefs::{canonical_transition, ObjectId, PreferenceOrder};
use crate::rational::{pow, to_canonical, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("utility functions over {0} and {1} objects")]
    Dimension(usize, usize),
    #[error("utility function has ties and is consistent with no strict order")]
    NotStrict,
    #[error("utility function is constant")]
    Constant,
    #[error("no transition between {a} and {b}: the path does not reverse them")]
    NoTransition { a: usize, b: usize },
    #[error("ratio {s} is not attained on the path for objects {a}, {b}")]
    OutOfRange { a: usize, b: usize, s: String },
    #[error("parameter {0} is outside its allowed range")]
    ParameterRange(String),
    #[error("path makes simultaneous transitions; no passage certificate")]
    Simultaneous,
    #[error("no witness for order #{index} ({order}) inside the bounded-indifference region")]
    NoWitness { index: usize, order: String },
    #[error("no base C up to {0} separates the transitions")]
    BaseLimit(String),
}

impl From<AssignError> for GeometryError {
    fn from(e: AssignError) -> Self {
        GeometryError::ParameterRange(e.to_string())
    }
}

/// True iff `u` strictly decreases along the ranking of `p`.
pub fn consistent(u: &UtilityFunction, p: &PreferenceOrder) -> bool {
    u.m() == p.m() && p.ranking().windows(2).all(|w| u.value(w[0].0) > u.value(w[1].0))
}

/// The strict order `u` is consistent with, if it has no ties.
pub fn order_of(u: &UtilityFunction) -> Option<PreferenceOrder> {
    let mut idx: Vec<usize> = (0..u.m()).collect();
    idx.sort_by(|&a, &b| u.value(b).cmp(u.value(a)).then(a.cmp(&b)));
    let order = PreferenceOrder::from_indices(&idx).ok()?;
    consistent(u, &order).then_some(order)
}

/// Bounded indifference at level `r`: for all `a, b` with `u(a) > u(b)`,
/// `r (u(a) - min u) >= u(b) - min u`.
pub fn urbi_satisfies(u: &UtilityFunction, r: &Rational) -> bool {
    let min = u.min_value();
    let vals = u.values();
    vals.iter()
        .all(|a| vals.iter().filter(|b| *b < a).all(|b| r * (a - &min) >= b - &min))
}

/// Least `r` with `urbi_satisfies(u, r)`.
pub fn urbi_min_bound(u: &UtilityFunction) -> Result<Rational, GeometryError> {
    let min = u.min_value();
    let vals = u.values();
    let mut best: Option<Rational> = None;
    for a in vals {
        for b in vals.iter().filter(|b| *b < a) {
            let ratio = (b - &min) / (a - &min);
            if best.as_ref().is_none_or(|x| ratio > *x) {
                best = Some(ratio);
            }
        }
    }
    best.ok_or(GeometryError::Constant)
}

/// `u(j_k) = r^{k-1}` along the ranking, except the last object gets 0.
pub fn geometric_utility(p: &PreferenceOrder, r: &Rational) -> Result<UtilityFunction, GeometryError> {
    if !r.is_positive() || *r >= Rational::one() {
        return Err(GeometryError::ParameterRange(format!("r = {}", to_canonical(r))));
    }
    Ok(geometric_utility_unchecked(p, r))
}

pub(crate) fn geometric_utility_unchecked(p: &PreferenceOrder, r: &Rational) -> UtilityFunction {
    let m = p.m();
    let mut values = vec![Rational::zero(); m];
    let mut power = Rational::one();
    for (k, o) in p.ranking().iter().enumerate() {
        if k + 1 < m {
            values[o.0] = power.clone();
            power *= r;
        }
    }
    UtilityFunction::new(values).expect("nonnegative")
}

/// `v(j) = C^{m - rank(j)}` for the order `p`.
pub fn construct_target_utility(p: &PreferenceOrder, c: &Rational) -> Result<UtilityFunction, GeometryError> {
    if *c <= Rational::one() {
        return Err(GeometryError::ParameterRange(format!("C = {}", to_canonical(c))));
    }
    let m = p.m();
    let mut values = vec![Rational::zero(); m];
    for (k, o) in p.ranking().iter().enumerate() {
        values[o.0] = pow(c, (m - 1 - k) as i32);
    }
    Ok(UtilityFunction::new(values).expect("powers are positive"))
}

/// The straight path from `u` to `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineSegment {
    u: UtilityFunction,
    v: UtilityFunction,
    pieces: Vec<(Rational, Rational, usize)>,
}

impl LineSegment {
    pub fn new(u: UtilityFunction, v: UtilityFunction) -> Result<Self, GeometryError> {
        if u.m() != v.m() {
            return Err(GeometryError::Dimension(u.m(), v.m()));
        }
        let mut seg = LineSegment {
            u,
            v,
            pieces: Vec::new(),
        };
        seg.pieces = seg.envelope_pieces();
        Ok(seg)
    }

    pub fn u(&self) -> &UtilityFunction {
        &self.u
    }

    pub fn v(&self) -> &UtilityFunction {
        &self.v
    }

    pub fn m(&self) -> usize {
        self.u.m()
    }

    /// `u_α(j)`.
    pub fn value(&self, alpha: &Rational, j: usize) -> Rational {
        self.u.value(j) + alpha * (self.v.value(j) - self.u.value(j))
    }

    /// `u_α` as a utility function; `alpha` must lie in `[0, 1]`.
    pub fn at(&self, alpha: &Rational) -> UtilityFunction {
        UtilityFunction::new((0..self.m()).map(|j| self.value(alpha, j)).collect())
            .expect("convex combination of nonnegative values")
    }

    /// Every `α ∈ [0, 1]` where two value lines cross, plus both ends.
    fn breakpoints(&self) -> Vec<Rational> {
        let mut pts = vec![Rational::zero(), Rational::one()];
        let m = self.m();
        for j in 0..m {
            for k in j + 1..m {
                let gap0 = self.u.value(k) - self.u.value(j);
                let denom = &gap0 - (self.v.value(k) - self.v.value(j));
                if denom.is_zero() {
                    continue;
                }
                let t = gap0 / denom;
                if t.is_positive() && t < Rational::one() {
                    pts.push(t);
                }
            }
        }
        pts.sort();
        pts.dedup();
        pts
    }

    /// Pieces of `[0, 1]` on which `α ↦ min_j u_α(j)` follows one line,
    /// paired with that line's object.
    fn envelope_pieces(&self) -> Vec<(Rational, Rational, usize)> {
        let pts = self.breakpoints();
        let two = Rational::from_integer(2.into());
        pts.windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / &two;
                let j = (0..self.m())
                    .min_by(|&a, &b| self.value(&mid, a).cmp(&self.value(&mid, b)))
                    .expect("at least one object");
                (w[0].clone(), w[1].clone(), j)
            })
            .collect()
    }

    /// `f(α) = u_α(b) - r u_α(a) - (1 - r) min_j u_α(j)`; positive exactly
    /// when `u_α` breaks bounded indifference for `a` above `b`.
    fn excess(&self, a: usize, b: usize, r: &Rational, alpha: &Rational, min_obj: usize) -> Rational {
        self.value(alpha, b) - r * self.value(alpha, a) - (Rational::one() - r) * self.value(alpha, min_obj)
    }

    /// Infimum and supremum of `{α : f(α) > 0}` (`positive`), or minimum and
    /// maximum of `{α : f(α) ≤ 0}` otherwise. `f` is convex, so the second
    /// set is a closed interval.
    fn level_set(&self, a: usize, b: usize, r: &Rational, positive: bool) -> Option<(Rational, Rational)> {
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for (t0, t1, j) in &self.pieces {
            let (t0, t1, j) = (t0.clone(), t1.clone(), *j);
            let f0 = self.excess(a, b, r, &t0, j);
            let f1 = self.excess(a, b, r, &t1, j);
            let in0 = if positive { f0.is_positive() } else { !f0.is_positive() };
            let in1 = if positive { f1.is_positive() } else { !f1.is_positive() };
            let piece = match (in0, in1) {
                (true, true) => Some((t0, t1)),
                (false, false) => None,
                _ => {
                    let root = &t0 + (&t1 - &t0) * &f0 / (&f0 - &f1);
                    if in0 {
                        Some((t0, root))
                    } else {
                        Some((root, t1))
                    }
                }
            };
            if let Some((p, q)) = piece {
                if lo.as_ref().is_none_or(|l| p < *l) {
                    lo = Some(p);
                }
                if hi.as_ref().is_none_or(|h| q > *h) {
                    hi = Some(q);
                }
            }
        }
        Some((lo?, hi?))
    }

    fn pair_times(&self) -> Vec<(Rational, usize, usize)> {
        let m = self.m();
        let mut times = Vec::new();
        for a in 0..m {
            for b in 0..m {
                if self.u.value(a) > self.u.value(b) && self.v.value(a) < self.v.value(b) {
                    times.push((transition_time_unchecked(self, a, b), a, b));
                }
            }
        }
        times
    }
}

fn transition_time_unchecked(seg: &LineSegment, a: usize, b: usize) -> Rational {
    let du = seg.u.value(a) - seg.u.value(b);
    let dv = seg.v.value(b) - seg.v.value(a);
    &du / (&du + dv)
}

/// The `α` where the path is indifferent between `a` and `b`, given
/// `u(a) > u(b)` and `v(a) < v(b)`.
pub fn transition_time(seg: &LineSegment, a: ObjectId, b: ObjectId) -> Result<Rational, GeometryError> {
    let (a, b) = (a.0, b.0);
    if !(seg.u.value(a) > seg.u.value(b) && seg.v.value(a) < seg.v.value(b)) {
        return Err(GeometryError::NoTransition { a, b });
    }
    Ok(transition_time_unchecked(seg, a, b))
}

/// The `α` with `u_α(b) / u_α(a) = s`.
///
/// Requires `u(a), v(a) > 0`, so the ratio is a monotone linear-fractional
/// function of `α`, and `s` between its values at the two ends.
pub fn ratio_crossing_time(
    seg: &LineSegment,
    a: ObjectId,
    b: ObjectId,
    s: &Rational,
) -> Result<Rational, GeometryError> {
    let (ai, bi) = (a.0, b.0);
    let out = || GeometryError::OutOfRange {
        a: ai,
        b: bi,
        s: to_canonical(s),
    };
    let (ua, ub, va, vb) = (seg.u.value(ai), seg.u.value(bi), seg.v.value(ai), seg.v.value(bi));
    if !ua.is_positive() || !va.is_positive() {
        return Err(out());
    }
    let start = ub / ua;
    let end = vb / va;
    let (lo, hi) = if start <= end { (&start, &end) } else { (&end, &start) };
    if s < lo || s > hi {
        return Err(out());
    }
    if *s == start {
        return Ok(Rational::zero());
    }
    let num = s * ua - ub;
    let den = &num + vb - s * va;
    Ok(num / den)
}

/// Infimum and supremum of the times at which `u_α` breaks bounded
/// indifference at level `r` for `a` above `b`; `None` if it never does.
pub fn violation_times(seg: &LineSegment, a: ObjectId, b: ObjectId, r: &Rational) -> Option<(Rational, Rational)> {
    seg.level_set(a.0, b.0, r, true)
}

/// First time the constraint for `a` above `b` is broken.
pub fn first_violation(seg: &LineSegment, a: ObjectId, b: ObjectId, r: &Rational) -> Option<Rational> {
    violation_times(seg, a, b, r).map(|(lo, _)| lo)
}

/// Last time the constraint for `b` above `a` is broken, i.e. the point
/// after which `b` has pulled far enough ahead of `a`.
pub fn last_reverse_violation(seg: &LineSegment, a: ObjectId, b: ObjectId, r: &Rational) -> Option<Rational> {
    violation_times(seg, b, a, r).map(|(_, hi)| hi)
}

/// Checks `first_violation < transition_time < last_reverse_violation` for
/// a pair the path reverses.
///
/// Returns `None` when the ordering is not defined: the path does not
/// reverse the pair, one of the violation sets is empty, or both objects
/// share the minimum value at the crossing, where the indifference ratio is
/// `0/0` and both violation times coincide with the crossing.
pub fn transition_ordering(seg: &LineSegment, a: ObjectId, b: ObjectId, r: &Rational) -> Option<bool> {
    let t = transition_time(seg, a, b).ok()?;
    let at = seg.at(&t);
    if *at.value(a.0) == at.min_value() {
        return None;
    }
    let first = first_violation(seg, a, b, r)?;
    let last = last_reverse_violation(seg, a, b, r)?;
    Some(first < t && t < last)
}

/// Orders met along a path, in sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassedSequence {
    pub orders: Vec<PreferenceOrder>,
    /// Distinct transition times, increasing; one fewer than `orders`.
    pub times: Vec<Rational>,
    /// Some transition times coincide.
    pub simultaneous: bool,
}

/// Sweeps `α` from 0 to 1 and records each order the path is consistent with.
pub fn passed_sequence(seg: &LineSegment) -> Result<PassedSequence, GeometryError> {
    let start = order_of(&seg.u).ok_or(GeometryError::NotStrict)?;
    order_of(&seg.v).ok_or(GeometryError::NotStrict)?;
    let pairs = seg.pair_times();
    let mut times: Vec<Rational> = pairs.iter().map(|(t, _, _)| t.clone()).collect();
    times.sort();
    times.dedup();
    let simultaneous = times.len() < pairs.len();
    let two = Rational::from_integer(2.into());
    let mut orders = vec![start];
    for (k, t) in times.iter().enumerate() {
        let probe = match times.get(k + 1) {
            Some(next) => (t + next) / &two,
            None => Rational::one(),
        };
        orders.push(order_of(&seg.at(&probe)).ok_or(GeometryError::NotStrict)?);
    }
    Ok(PassedSequence {
        orders,
        times,
        simultaneous,
    })
}

/// Pairs ranked `a ≻ b` by `pt` and `b ≻ a` by `pf`.
fn inverted_pairs(pt: &PreferenceOrder, pf: &PreferenceOrder) -> Vec<(usize, usize)> {
    let post = pt.positions();
    let posf = pf.positions();
    let m = pt.m();
    let mut out = Vec::new();
    for a in 0..m {
        for b in 0..m {
            if post[a] < post[b] && posf[b] < posf[a] {
                out.push((a, b));
            }
        }
    }
    out
}

/// Whether the transition times respect the bubble-sort schedule: for
/// inverted pairs `(a, b)` and `(c, d)`, the swap of `a, b` comes first when
/// `pf` ranks `b` above `d`, or when `b = d` and `pt` ranks `c` above `a`.
pub fn check_canonical_conditions(seg: &LineSegment, pt: &PreferenceOrder, pf: &PreferenceOrder) -> bool {
    if !consistent(&seg.u, pt) || !consistent(&seg.v, pf) {
        return false;
    }
    let post = pt.positions();
    let posf = pf.positions();
    let inv = inverted_pairs(pt, pf);
    let times: Vec<Rational> = inv.iter().map(|&(a, b)| transition_time_unchecked(seg, a, b)).collect();
    for (i, &(a, b)) in inv.iter().enumerate() {
        for (k, &(c, d)) in inv.iter().enumerate() {
            if i == k {
                continue;
            }
            let earlier = posf[b] < posf[d] || (b == d && post[c] < post[a]);
            if earlier && times[i] >= times[k] {
                return false;
            }
        }
    }
    true
}

/// For inverted pairs swapped in sequence, the constraint on the first pair
/// is restored before the constraint on the second is first broken.
pub fn transitions_separated(seg: &LineSegment, pt: &PreferenceOrder, pf: &PreferenceOrder, r: &Rational) -> bool {
    let inv = inverted_pairs(pt, pf);
    let data: Vec<(Rational, Option<Rational>, Option<Rational>)> = inv
        .iter()
        .map(|&(a, b)| {
            (
                transition_time_unchecked(seg, a, b),
                last_reverse_violation(seg, ObjectId(a), ObjectId(b), r),
                first_violation(seg, ObjectId(a), ObjectId(b), r),
            )
        })
        .collect();
    for (t1, last1, _) in &data {
        for (t2, _, first2) in &data {
            if t1 < t2 {
                if let (Some(l), Some(f)) = (last1, first2) {
                    if l > f {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Largest base tried by [`adaptive_target`].
pub fn max_adaptive_base() -> Rational {
    pow(&Rational::from_integer(2.into()), 80)
}

/// Target utility `C^{m - rank}` for `pf` with `C` doubled from `2m` until
/// the path from `u` follows the canonical transition, consecutive swaps
/// are separated at level `r`, and the target satisfies bounded
/// indifference at `r`.
pub fn adaptive_target(
    u: &UtilityFunction,
    pt: &PreferenceOrder,
    pf: &PreferenceOrder,
    r: &Rational,
) -> Result<(Rational, LineSegment), GeometryError> {
    let two = Rational::from_integer(2.into());
    let mut c = Rational::from_integer((2 * pf.m().max(1)).into());
    let limit = max_adaptive_base();
    while c <= limit {
        let v = construct_target_utility(pf, &c)?;
        let seg = LineSegment::new(u.clone(), v)?;
        if check_canonical_conditions(&seg, pt, pf)
            && transitions_separated(&seg, pt, pf, r)
            && urbi_satisfies(seg.v(), r)
        {
            return Ok((c, seg));
        }
        c *= &two;
    }
    Err(GeometryError::BaseLimit(to_canonical(&limit)))
}

/// Witnesses that a path meets every order it passes inside the bounded
/// indifference region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PassageCertificate {
    #[serde(serialize_with = "serialize_orders")]
    pub orders: Vec<PreferenceOrder>,
    #[serde(with = "crate::rational::serde_canonical_vec")]
    pub witnesses: Vec<Rational>,
    pub simultaneous: bool,
}

fn serialize_orders<S: serde::Serializer>(orders: &[PreferenceOrder], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(orders.iter().map(|o| o.to_string()))
}

impl fmt::Display for PassageCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (o, w) in self.orders.iter().zip(&self.witnesses) {
            writeln!(f, "  {o}  at α = {}", to_canonical(w))?;
        }
        Ok(())
    }
}

/// Finds, for each order the path passes, a time at which the path is
/// consistent with that order and satisfies bounded indifference at `r`.
pub fn urbi_passage_witness(seg: &LineSegment, r: &Rational) -> Result<PassageCertificate, GeometryError> {
    if !r.is_positive() || *r > Rational::one() {
        return Err(GeometryError::ParameterRange(format!("r = {}", to_canonical(r))));
    }
    let seq = passed_sequence(seg)?;
    if seq.simultaneous {
        return Err(GeometryError::Simultaneous);
    }
    let k_last = seq.orders.len() - 1;
    let mut witnesses = Vec::with_capacity(seq.orders.len());
    let two = Rational::from_integer(2.into());
    for (k, order) in seq.orders.iter().enumerate() {
        // Consistency interval: open at interior transition times.
        let (mut lo, mut lo_open) = if k == 0 {
            (Rational::zero(), false)
        } else {
            (seq.times[k - 1].clone(), true)
        };
        let (mut hi, mut hi_open) = if k == k_last {
            (Rational::one(), false)
        } else {
            (seq.times[k].clone(), true)
        };
        let ranking = order.ranking();
        let mut empty = false;
        'pairs: for (i, a) in ranking.iter().enumerate() {
            for b in &ranking[i + 1..] {
                match seg.level_set(a.0, b.0, r, false) {
                    None => {
                        empty = true;
                        break 'pairs;
                    }
                    Some((p, q)) => {
                        if p > lo {
                            lo = p;
                            lo_open = false;
                        }
                        if q < hi {
                            hi = q;
                            hi_open = false;
                        }
                    }
                }
            }
        }
        let nonempty = !empty && (lo < hi || (lo == hi && !lo_open && !hi_open));
        let witness = if !nonempty {
            None
        } else if !lo_open {
            Some(lo.clone())
        } else if !hi_open {
            Some(hi.clone())
        } else {
            Some((&lo + &hi) / &two)
        };
        let ok = witness.as_ref().is_some_and(|w| {
            let point = seg.at(w);
            consistent(&point, order) && urbi_satisfies(&point, r)
        });
        if !ok {
            return Err(GeometryError::NoWitness {
                index: k,
                order: order.to_string(),
            });
        }
        witnesses.push(witness.unwrap());
    }
    Ok(PassageCertificate {
        orders: seq.orders,
        witnesses,
        simultaneous: false,
    })
}

/// Whether the path from `u` passes exactly the canonical transition.
pub fn follows_canonical_transition(
    seg: &LineSegment,
    pt: &PreferenceOrder,
    pf: &PreferenceOrder,
) -> Result<bool, GeometryError> {
    let seq = passed_sequence(seg)?;
    Ok(!seq.simultaneous && seq.orders == canonical_transition(pt, pf).expect("same universe"))
}
