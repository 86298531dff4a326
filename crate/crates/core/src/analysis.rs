//! Mechanism-level incentive checks.
//!
//! A manipulation is an agent, a truthful profile and a different report for
//! that agent. Manipulations are enumerated by agent, then profile index,
//! then misreport index, and every witness returned is the first violating
//! manipulation in that order.
//!
//! The checks only depend on the agent, the truthful order and the two
//! assignment vectors, so [`Analyzer`] collapses the enumeration to distinct
//! such pairs and remembers the first manipulation producing each.

use std::cell::OnceCell;
use std::collections::{HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::assign::{TabulatedMechanism, UtilityFunction};
use crate::dominance::{degree_of_ranked, ld_ranked, r_discounted_ranked, sd_ranked, DegreeValue};
use crate::geometry::{consistent, geometric_utility_unchecked, urbi_satisfies};
use crate::prefs::{neighborhood, PreferenceOrder, PreferenceProfile};
use crate::rational::{to_canonical, Rational};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("discount factor {0} is outside (0, 1]")]
    DiscountOutOfRange(String),
    #[error("local-to-global bound violated: {0}")]
    TheoremViolation(Box<DegreeReport>),
    #[error("audit precondition failed: {0}")]
    AuditPrecondition(String),
}

/// An agent misreporting at a truthful profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manipulation {
    pub agent: usize,
    pub profile: PreferenceProfile,
    pub misreport: PreferenceOrder,
    pub local: bool,
    profile_text: Vec<String>,
    misreport_text: String,
}

impl Manipulation {
    pub fn truthful(&self) -> &PreferenceOrder {
        self.profile.order(self.agent)
    }

    pub fn misreported_profile(&self) -> PreferenceProfile {
        self.profile.with_report(self.agent, self.misreport.clone())
    }
}

impl fmt::Display for Manipulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "agent {} at [{}] reports {} instead of {}",
            self.agent,
            self.profile_text.join(", "),
            self.misreport_text,
            self.profile_text[self.agent]
        )
    }
}

impl Serialize for Manipulation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Manipulation", 4)?;
        st.serialize_field("agent", &self.agent)?;
        st.serialize_field("profile", &self.profile_text)?;
        st.serialize_field("misreport", &self.misreport_text)?;
        st.serialize_field("local", &self.local)?;
        st.end()
    }
}

/// Result of a yes/no strategyproofness check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub holds: bool,
    pub witness: Option<Manipulation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Coord {
    agent: u32,
    profile: usize,
    misreport: u32,
}

#[derive(Debug, Clone)]
struct PairKey {
    agent: u32,
    truth: u32,
    row_true: u32,
    row_mis: u32,
    diff: u32,
    first: Coord,
    first_local: Option<Coord>,
}

impl PairKey {
    fn coord(&self, local_only: bool) -> Option<Coord> {
        if local_only {
            self.first_local
        } else {
            Some(self.first)
        }
    }
}

/// Precomputed manipulation index for one mechanism.
pub struct Analyzer<'a> {
    mech: &'a TabulatedMechanism,
    neighbors: Vec<Vec<u32>>,
    keys: Vec<PairKey>,
    ranked: Vec<Vec<Rational>>,
    sd: Vec<bool>,
    ld: Vec<bool>,
    degrees: OnceCell<Vec<DegreeValue>>,
}

impl<'a> Analyzer<'a> {
    pub fn new(mech: &'a TabulatedMechanism) -> Self {
        let n = mech.n();
        let orders = mech.orders();
        let f = orders.len();
        let neighbors: Vec<Vec<u32>> = orders
            .iter()
            .map(|o| neighborhood(o).iter().map(|q| q.lex_index() as u32).collect())
            .collect();
        let total = mech.profile_count();

        let mut index: HashMap<(u32, u32, u32, u32), usize> = HashMap::new();
        let mut keys: Vec<PairKey> = Vec::new();
        let mut ranked_index: HashMap<Vec<Rational>, u32> = HashMap::new();
        let mut ranked: Vec<Vec<Rational>> = Vec::new();

        for agent in 0..n {
            let w = mech.radix_weight(agent);
            let block = w * f;
            let mut seen_contexts: HashSet<Vec<u32>> = HashSet::new();
            for hi in 0..total / block {
                for lo in 0..w {
                    let base = hi * block + lo;
                    let rows: Vec<u32> = (0..f).map(|t| mech.row_id(base + t * w, agent)).collect();
                    if !seen_contexts.insert(rows.clone()) {
                        // An earlier context yields the same pairs at smaller profile indices.
                        continue;
                    }
                    for t in 0..f {
                        for mis in 0..f {
                            if mis == t {
                                continue;
                            }
                            let coord = Coord {
                                agent: agent as u32,
                                profile: base + t * w,
                                misreport: mis as u32,
                            };
                            let local = neighbors[t].contains(&(mis as u32));
                            let id = (agent as u32, t as u32, rows[t], rows[mis]);
                            match index.get(&id) {
                                Some(&k) => {
                                    let key = &mut keys[k];
                                    if coord < key.first {
                                        key.first = coord;
                                    }
                                    if local && key.first_local.is_none_or(|c| coord < c) {
                                        key.first_local = Some(coord);
                                    }
                                }
                                None => {
                                    let order = &orders[t];
                                    let x = mech.row_by_id(rows[t]);
                                    let y = mech.row_by_id(rows[mis]);
                                    let d: Vec<Rational> =
                                        order.ranking().iter().map(|o| x.get(o.0) - y.get(o.0)).collect();
                                    let diff = match ranked_index.get(&d) {
                                        Some(&i) => i,
                                        None => {
                                            let i = ranked.len() as u32;
                                            ranked_index.insert(d.clone(), i);
                                            ranked.push(d);
                                            i
                                        }
                                    };
                                    index.insert(id, keys.len());
                                    keys.push(PairKey {
                                        agent: agent as u32,
                                        truth: t as u32,
                                        row_true: rows[t],
                                        row_mis: rows[mis],
                                        diff,
                                        first: coord,
                                        first_local: local.then_some(coord),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        keys.sort_by_key(|k| k.first);
        let sd = ranked.iter().map(|d| sd_ranked(d)).collect();
        let ld = ranked.iter().map(|d| ld_ranked(d)).collect();
        Analyzer {
            mech,
            neighbors,
            keys,
            ranked,
            sd,
            ld,
            degrees: OnceCell::new(),
        }
    }

    pub fn mechanism(&self) -> &TabulatedMechanism {
        self.mech
    }

    /// Number of distinct (agent, truthful order, outcome pair) classes.
    pub fn pair_classes(&self) -> usize {
        self.keys.len()
    }

    fn manipulation(&self, c: Coord) -> Manipulation {
        let profile = self.mech.profile_at(c.profile);
        let misreport = self.mech.orders()[c.misreport as usize].clone();
        let agent = c.agent as usize;
        let truth = profile.order(agent).lex_index();
        let local = self.neighbors[truth].contains(&c.misreport);
        let names = self.mech.names();
        Manipulation {
            agent,
            profile_text: profile.display_with(names),
            misreport_text: misreport.display_with(names),
            profile,
            misreport,
            local,
        }
    }

    fn first_failure(&self, local_only: bool, holds: impl Fn(&PairKey) -> bool) -> CheckOutcome {
        let worst = self
            .keys
            .iter()
            .filter_map(|k| k.coord(local_only).map(|c| (c, k)))
            .filter(|(_, k)| !holds(k))
            .map(|(c, _)| c)
            .min();
        CheckOutcome {
            holds: worst.is_none(),
            witness: worst.map(|c| self.manipulation(c)),
        }
    }

    pub fn check_sd_sp(&self, local_only: bool) -> CheckOutcome {
        self.first_failure(local_only, |k| self.sd[k.diff as usize])
    }

    pub fn check_ld_sp(&self, local_only: bool) -> CheckOutcome {
        self.first_failure(local_only, |k| self.ld[k.diff as usize])
    }

    pub fn check_r_psp(&self, r: &Rational, local_only: bool) -> Result<CheckOutcome, AnalysisError> {
        check_discount(r)?;
        let verdicts: Vec<bool> = self
            .ranked
            .iter()
            .map(|d| r_discounted_ranked(d, r).expect("discount checked"))
            .collect();
        Ok(self.first_failure(local_only, |k| verdicts[k.diff as usize]))
    }

    fn degrees(&self) -> &[DegreeValue] {
        self.degrees
            .get_or_init(|| self.ranked.iter().map(|d| degree_of_ranked(d)).collect())
    }

    /// Minimum per-pair degree over all (or only local) manipulations, with
    /// the manipulation attaining it. `None` when there is no manipulation.
    pub fn max_degree(&self, local_only: bool) -> (DegreeValue, Option<Manipulation>) {
        let degrees = self.degrees();
        let mut best: Option<(DegreeValue, Coord)> = None;
        let mut value = DegreeValue::one();
        for k in &self.keys {
            let Some(c) = k.coord(local_only) else {
                continue;
            };
            let d = &degrees[k.diff as usize];
            value = value.min(d);
            let better = match &best {
                None => true,
                Some((b, bc)) => match d.cmp_lower(b) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Equal => c < *bc,
                    std::cmp::Ordering::Greater => false,
                },
            };
            if better {
                best = Some((d.clone(), c));
            }
        }
        (value, best.map(|(_, c)| self.manipulation(c)))
    }

    /// Local and global degrees and the squared-bound check between them.
    pub fn verify_theorem1(&self) -> Result<DegreeReport, AnalysisError> {
        let (r_local, binding_local) = self.max_degree(true);
        let (r_global, binding_global) = self.max_degree(false);
        let local_sq_upper = r_local.upper() * r_local.upper();
        let margin = r_global.lower() - &local_sq_upper;
        let lower_bound_ok = !margin.is_negative();
        let upper_bound_ok = r_global.lower() <= r_local.upper();
        let report = DegreeReport {
            r_local,
            r_global,
            binding_local,
            binding_global,
            theorem1_margin: margin,
            theorem1_ok: lower_bound_ok && upper_bound_ok,
        };
        if report.theorem1_ok {
            Ok(report)
        } else {
            Err(AnalysisError::TheoremViolation(Box::new(report)))
        }
    }

    /// Draws utilities with bounded indifference at `r` for every agent and
    /// truthful order and checks that truth-telling maximizes expected utility
    /// against every misreport.
    pub fn sampled_utility_audit(&self, r: &Rational, samples: usize, seed: u64) -> Result<AuditReport, AnalysisError> {
        check_discount(r)?;
        let pre = self.check_r_psp(r, false)?;
        if let Some(w) = pre.witness {
            return Err(AnalysisError::AuditPrecondition(format!(
                "mechanism is not {}-partially strategyproof ({w})",
                to_canonical(r)
            )));
        }
        let scaled = ScaledRows::new(self.mech);
        let f = self.mech.orders().len();

        // Distinct outcome differences per (agent, truthful order).
        let mut groups: Vec<Vec<(Vec<i128>, Coord)>> = vec![Vec::new(); self.mech.n() * f];
        let mut seen: HashSet<(u32, u32, Vec<i128>)> = HashSet::new();
        for k in &self.keys {
            if k.row_true == k.row_mis {
                continue;
            }
            let d = scaled.diff(k.row_true, k.row_mis);
            if seen.insert((k.agent, k.truth, d.clone())) {
                groups[k.agent as usize * f + k.truth as usize].push((d, k.first));
            }
        }

        let mut report = AuditReport {
            r: r.clone(),
            samples,
            seed,
            groups: 0,
            utilities: 0,
            checks: 0,
            min_margin: None,
            violations: Vec::new(),
            violation_count: 0,
        };
        for agent in 0..self.mech.n() {
            for t in 0..f {
                let diffs = &groups[agent * f + t];
                if diffs.is_empty() {
                    continue;
                }
                report.groups += 1;
                let order = &self.mech.orders()[t];
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, agent as u64, t as u64));
                let utilities = sample_utilities(order, r, samples, &mut rng);
                for u in &utilities {
                    report.utilities += 1;
                    let (ints, denom) = integer_utility(u);
                    let mut worst: Option<(BigInt, Coord)> = None;
                    for (d, coord) in diffs {
                        report.checks += 1;
                        let gain = dot(&ints, d);
                        if worst.as_ref().is_none_or(|(w, _)| gain < *w) {
                            worst = Some((gain, *coord));
                        }
                    }
                    let (gain, coord) = worst.expect("nonempty group");
                    let margin = Rational::new(gain, &denom * &scaled.common);
                    if margin.is_negative() {
                        report.violation_count += 1;
                        if report.violations.len() < MAX_REPORTED_VIOLATIONS {
                            report.violations.push(AuditViolation {
                                utility: u.values().to_vec(),
                                manipulation: self.manipulation(coord),
                                margin: margin.clone(),
                            });
                        }
                    }
                    if report.min_margin.as_ref().is_none_or(|x| margin < *x) {
                        report.min_margin = Some(margin);
                    }
                }
            }
        }
        Ok(report)
    }
}

const MAX_REPORTED_VIOLATIONS: usize = 10;

fn check_discount(r: &Rational) -> Result<(), AnalysisError> {
    if !r.is_positive() || *r > Rational::one() {
        return Err(AnalysisError::DiscountOutOfRange(to_canonical(r)));
    }
    Ok(())
}

fn mix_seed(seed: u64, agent: u64, truth: u64) -> u64 {
    let mut x = seed ^ agent.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ truth.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    x ^= x >> 31;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^ (x >> 29)
}

/// Granularity of the ratio grid used by the audit sampler.
pub const AUDIT_GRID: i64 = 64;

/// Utilities consistent with `order` satisfying bounded indifference at `r`:
/// the geometric utility (when `r < 1`) plus `samples` random draws.
///
/// Each draw fixes the top value at 1 and the bottom at 0 and picks every
/// other consecutive ratio from the grid `r k / G`, `k = 1..=G`. Draws that
/// fail the consistency or bounded-indifference test are rejected.
fn sample_utilities(
    order: &PreferenceOrder,
    r: &Rational,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<UtilityFunction> {
    let m = order.m();
    let mut out = Vec::with_capacity(samples + 1);
    if *r < Rational::one() && m >= 2 {
        out.push(geometric_utility_unchecked(order, r));
    }
    let grid = Rational::from_integer(AUDIT_GRID.into());
    let mut attempts = 0;
    while out.len() < samples + usize::from(*r < Rational::one() && m >= 2) && attempts < 20 * samples.max(1) {
        attempts += 1;
        let mut values = vec![Rational::zero(); m];
        let mut current = Rational::one();
        for (k, o) in order.ranking().iter().enumerate() {
            if k + 1 == m && m >= 2 {
                break;
            }
            values[o.0] = current.clone();
            let step = Rational::from_integer(rng.gen_range(1..=AUDIT_GRID).into());
            current = &current * r * step / &grid;
        }
        let u = UtilityFunction::new(values).expect("nonnegative");
        if consistent(&u, order) && urbi_satisfies(&u, r) {
            out.push(u);
        }
    }
    out
}

/// `u` scaled to integers, with the common denominator.
fn integer_utility(u: &UtilityFunction) -> (Vec<BigInt>, BigInt) {
    let denom = u.values().iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints = u.values().iter().map(|v| v.numer() * (&denom / v.denom())).collect();
    (ints, denom)
}

fn dot(u: &[BigInt], d: &[i128]) -> BigInt {
    let small: Option<Vec<i128>> = u.iter().map(|x| x.to_i128()).collect();
    if let Some(small) = small {
        let mut acc: i128 = 0;
        let mut ok = true;
        for (a, b) in small.iter().zip(d) {
            match a.checked_mul(*b).and_then(|p| acc.checked_add(p)) {
                Some(v) => acc = v,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return BigInt::from(acc);
        }
    }
    u.iter().zip(d).map(|(a, b)| a * BigInt::from(*b)).sum()
}

/// Assignment rows scaled to integers by a common denominator.
struct ScaledRows {
    common: BigInt,
    rows: Vec<Vec<i128>>,
}

impl ScaledRows {
    fn new(mech: &TabulatedMechanism) -> Self {
        let common = mech
            .distinct_rows()
            .iter()
            .flat_map(|r| r.probs())
            .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let rows = mech
            .distinct_rows()
            .iter()
            .map(|r| {
                r.probs()
                    .iter()
                    .map(|p| {
                        (p.numer() * (&common / p.denom()))
                            .to_i128()
                            .expect("assignment denominators fit in 127 bits")
                    })
                    .collect()
            })
            .collect();
        ScaledRows { common, rows }
    }

    fn diff(&self, a: u32, b: u32) -> Vec<i128> {
        self.rows[a as usize]
            .iter()
            .zip(&self.rows[b as usize])
            .map(|(x, y)| x - y)
            .collect()
    }
}

/// Local and global degrees of partial strategyproofness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeReport {
    pub r_local: DegreeValue,
    pub r_global: DegreeValue,
    pub binding_local: Option<Manipulation>,
    pub binding_global: Option<Manipulation>,
    /// Lower end of `r_global` minus the square of the upper end of `r_local`.
    pub theorem1_margin: Rational,
    pub theorem1_ok: bool,
}

impl Serialize for DegreeReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("DegreeReport", 6)?;
        st.serialize_field("r_local", &self.r_local)?;
        st.serialize_field("r_global", &self.r_global)?;
        st.serialize_field("binding_local", &self.binding_local)?;
        st.serialize_field("binding_global", &self.binding_global)?;
        st.serialize_field("theorem1_margin", &to_canonical(&self.theorem1_margin))?;
        st.serialize_field("theorem1_ok", &self.theorem1_ok)?;
        st.end()
    }
}

impl fmt::Display for DegreeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "r_local  = {}", self.r_local)?;
        if let Some(b) = &self.binding_local {
            writeln!(f, "  binding: {b}")?;
        }
        writeln!(f, "r_global = {}", self.r_global)?;
        if let Some(b) = &self.binding_global {
            writeln!(f, "  binding: {b}")?;
        }
        write!(
            f,
            "r_global >= r_local^2: {} (margin {})",
            if self.theorem1_ok { "yes" } else { "NO" },
            to_canonical(&self.theorem1_margin)
        )
    }
}

/// A sampled utility under which a misreport pays off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditViolation {
    pub utility: Vec<Rational>,
    pub manipulation: Manipulation,
    pub margin: Rational,
}

impl Serialize for AuditViolation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AuditViolation", 3)?;
        let u: Vec<String> = self.utility.iter().map(to_canonical).collect();
        st.serialize_field("utility", &u)?;
        st.serialize_field("manipulation", &self.manipulation)?;
        st.serialize_field("margin", &to_canonical(&self.margin))?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub r: Rational,
    pub samples: usize,
    pub seed: u64,
    /// (agent, truthful order) groups with at least one distinct misreport outcome.
    pub groups: usize,
    pub utilities: usize,
    pub checks: usize,
    /// Smallest expected-utility gain of truth-telling observed.
    pub min_margin: Option<Rational>,
    pub violations: Vec<AuditViolation>,
    pub violation_count: usize,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

impl Serialize for AuditReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AuditReport", 9)?;
        st.serialize_field("r", &to_canonical(&self.r))?;
        st.serialize_field("samples", &self.samples)?;
        st.serialize_field("seed", &self.seed)?;
        st.serialize_field("groups", &self.groups)?;
        st.serialize_field("utilities", &self.utilities)?;
        st.serialize_field("checks", &self.checks)?;
        st.serialize_field("min_margin", &self.min_margin.as_ref().map(to_canonical))?;
        st.serialize_field("violation_count", &self.violation_count)?;
        st.serialize_field("violations", &self.violations)?;
        st.end()
    }
}

pub fn check_sd_sp(mech: &TabulatedMechanism) -> CheckOutcome {
    Analyzer::new(mech).check_sd_sp(false)
}

pub fn check_ld_sp(mech: &TabulatedMechanism) -> CheckOutcome {
    Analyzer::new(mech).check_ld_sp(false)
}

pub fn check_r_psp(mech: &TabulatedMechanism, r: &Rational, local_only: bool) -> Result<CheckOutcome, AnalysisError> {
    Analyzer::new(mech).check_r_psp(r, local_only)
}

pub fn max_degree(mech: &TabulatedMechanism, local_only: bool) -> (DegreeValue, Option<Manipulation>) {
    Analyzer::new(mech).max_degree(local_only)
}

pub fn verify_theorem1(mech: &TabulatedMechanism) -> Result<DegreeReport, AnalysisError> {
    Analyzer::new(mech).verify_theorem1()
}

pub fn sampled_utility_audit(
    mech: &TabulatedMechanism,
    r: &Rational,
    samples: usize,
    seed: u64,
) -> Result<AuditReport, AnalysisError> {
    Analyzer::new(mech).sampled_utility_audit(r, samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::{tabulate_ps, tabulate_rsd, AssignmentMatrix, AssignmentVector, Setting};
    use crate::rational::{int, ratio};

    fn constant(n: usize, m: usize) -> TabulatedMechanism {
        let s = Setting::new(n, m, vec![n as u32; m]).unwrap();
        TabulatedMechanism::build_default(s, |_| {
            Ok(AssignmentMatrix::new(
                (0..n).map(|_| AssignmentVector::deterministic(m, 0)).collect(),
            ))
        })
        .unwrap()
    }

    /// One agent, two objects: reporting b>a yields a for sure.
    fn top_gain() -> TabulatedMechanism {
        let s = Setting::new(1, 2, vec![1, 1]).unwrap();
        TabulatedMechanism::build_default(s, |p| {
            let j = if p.order(0).to_string() == "a>b" { 1 } else { 0 };
            Ok(AssignmentMatrix::new(vec![AssignmentVector::deterministic(2, j)]))
        })
        .unwrap()
    }

    #[test]
    fn rsd_is_sd_strategyproof() {
        let mech = tabulate_rsd(&Setting::new(2, 2, vec![1, 1]).unwrap()).unwrap();
        assert!(check_sd_sp(&mech).holds);
        assert!(check_ld_sp(&mech).holds);
        let (deg, _) = max_degree(&mech, false);
        assert_eq!(deg, DegreeValue::one());
    }

    #[test]
    fn constant_mechanism_is_strategyproof() {
        let mech = constant(2, 3);
        assert!(check_sd_sp(&mech).holds);
        let report = verify_theorem1(&mech).unwrap();
        assert_eq!(report.r_local, DegreeValue::one());
        assert_eq!(report.theorem1_margin, int(0));
    }

    #[test]
    fn top_object_gain_breaks_ld() {
        let mech = top_gain();
        let out = check_ld_sp(&mech);
        assert!(!out.holds);
        let w = out.witness.unwrap();
        assert_eq!(w.truthful().to_string(), "a>b");
        assert_eq!(w.misreport.to_string(), "b>a");
        assert!(w.local);
        assert_eq!(max_degree(&mech, false).0, DegreeValue::zero());
    }

    #[test]
    fn r_one_matches_sd() {
        for mech in [
            top_gain(),
            tabulate_ps(&Setting::new(2, 3, vec![1, 1, 1]).unwrap()).unwrap(),
        ] {
            let an = Analyzer::new(&mech);
            assert_eq!(an.check_r_psp(&int(1), false).unwrap(), an.check_sd_sp(false));
        }
        assert!(check_r_psp(&top_gain(), &int(0), false).is_err());
    }

    #[test]
    fn witnesses_follow_enumeration_order() {
        let mech = tabulate_ps(&Setting::new(3, 3, vec![1, 1, 1]).unwrap()).unwrap();
        let an = Analyzer::new(&mech);
        let out = an.check_sd_sp(false);
        if let Some(w) = out.witness {
            // Brute force the first violation in (agent, profile, misreport) order.
            let mut first = None;
            'outer: for agent in 0..3 {
                for p in 0..mech.profile_count() {
                    let profile = mech.profile_at(p);
                    for mis in mech.orders() {
                        if mis == profile.order(agent) {
                            continue;
                        }
                        let x = mech.assignment_of(&profile, agent).unwrap();
                        let y = mech
                            .assignment_of(&profile.with_report(agent, mis.clone()), agent)
                            .unwrap();
                        if !crate::dominance::sd_dominates(profile.order(agent), x, y) {
                            first = Some((agent, profile, mis.clone()));
                            break 'outer;
                        }
                    }
                }
            }
            let (agent, profile, mis) = first.unwrap();
            assert_eq!((w.agent, &w.profile, &w.misreport), (agent, &profile, &mis));
        }
    }

    #[test]
    fn audit_on_sd_mechanism() {
        let mech = tabulate_rsd(&Setting::new(2, 3, vec![1, 1, 1]).unwrap()).unwrap();
        let report = sampled_utility_audit(&mech, &int(1), 100, 7).unwrap();
        assert!(report.passed());
        assert!(!report.min_margin.unwrap().is_negative());
    }

    #[test]
    fn audit_is_deterministic() {
        let mech = tabulate_ps(&Setting::new(2, 3, vec![1, 1, 1]).unwrap()).unwrap();
        let (deg, _) = max_degree(&mech, false);
        let a = sampled_utility_audit(&mech, deg.lower(), 50, 3).unwrap();
        let b = sampled_utility_audit(&mech, deg.lower(), 50, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn audit_refuses_unmet_precondition() {
        assert!(matches!(
            sampled_utility_audit(&top_gain(), &ratio(1, 2), 10, 0),
            Err(AnalysisError::AuditPrecondition(_))
        ));
    }

    #[test]
    fn seed_mixing_separates_groups() {
        assert_ne!(mix_seed(1, 0, 1), mix_seed(1, 1, 0));
    }
}
