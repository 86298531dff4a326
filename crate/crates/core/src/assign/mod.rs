//! Settings, random assignments and tabulated mechanisms.

mod file;
mod zoo;

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::prefs::{all_preference_orders, default_names, factorial, PreferenceOrder, PreferenceProfile, PrefsError};
use crate::rational::{to_canonical, Rational};

pub use file::{load_mechanism, mechanism_from_json, mechanism_to_json, save_mechanism};
pub use zoo::{tabulate_ps, tabulate_rsd, MAX_ZOO_AGENTS, MAX_ZOO_OBJECTS};

/// Upper bound on `(m!)^n` for a tabulated mechanism.
pub const MAX_TABLE_PROFILES: usize = 400_000;

#[derive(Debug, Error)]
pub enum AssignError {
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid assignment vector: {0}")]
    InvalidVector(String),
    #[error("invalid utility function: {0}")]
    InvalidUtility(String),
    #[error("table with {profiles} profiles exceeds the limit of {limit}")]
    TableTooLarge { profiles: u128, limit: usize },
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("incomplete table: no entry for profile {profile}")]
    IncompleteTable { profile: String },
    #[error("duplicate entry for profile {profile}")]
    DuplicateProfile { profile: String },
    #[error("profile {profile}: {reason}")]
    BadEntry { profile: String, reason: String },
    #[error("infeasible assignment for profile {profile}: {violations}")]
    Infeasible { profile: String, violations: String },
    #[error("malformed mechanism file: {0}")]
    Format(String),
    #[error(transparent)]
    Prefs(#[from] PrefsError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// `(N, M, q)`: agent count, object count and per-object capacities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Setting {
    n: usize,
    m: usize,
    q: Vec<u32>,
}

impl Setting {
    pub fn new(n: usize, m: usize, q: Vec<u32>) -> Result<Self, AssignError> {
        if n == 0 || m == 0 {
            return Err(AssignError::InvalidSetting(format!(
                "need at least one agent and one object (n = {n}, m = {m})"
            )));
        }
        if q.len() != m {
            return Err(AssignError::InvalidSetting(format!(
                "{} capacities given for {m} objects",
                q.len()
            )));
        }
        if q.contains(&0) {
            return Err(AssignError::InvalidSetting("capacities must be positive".into()));
        }
        let supply: u64 = q.iter().map(|&c| u64::from(c)).sum();
        if (n as u64) > supply {
            return Err(AssignError::InvalidSetting(format!(
                "{n} agents exceed total capacity {supply}"
            )));
        }
        Ok(Setting { n, m, q })
    }

    /// Every object gets capacity `ceil(n / m)`.
    pub fn balanced(n: usize, m: usize) -> Result<Self, AssignError> {
        let c = if m == 0 { 0 } else { n.div_ceil(m).max(1) };
        Self::new(n, m, vec![c as u32; m])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> &[u32] {
        &self.q
    }

    /// Number of preference profiles, `(m!)^n`, without overflow.
    pub fn profile_count(&self) -> u128 {
        let orders = factorial(self.m.min(30)) as u128;
        let mut total: u128 = 1;
        for _ in 0..self.n {
            total = total.saturating_mul(orders);
        }
        total
    }
}

/// One agent's lottery over objects.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AssignmentVector {
    probs: Vec<Rational>,
}

impl AssignmentVector {
    /// Checked constructor: entries in `[0, 1]` summing to exactly one.
    pub fn new(probs: Vec<Rational>) -> Result<Self, AssignError> {
        let v = AssignmentVector { probs };
        let problems = v.row_problems(0);
        if problems.is_empty() {
            Ok(v)
        } else {
            Err(AssignError::InvalidVector(join(&problems)))
        }
    }

    /// Wraps raw entries without checking them, e.g. before validation.
    pub fn new_unchecked(probs: Vec<Rational>) -> Self {
        AssignmentVector { probs }
    }

    /// The lottery that gives `object` with certainty.
    pub fn deterministic(m: usize, object: usize) -> Self {
        let mut probs = vec![Rational::zero(); m];
        probs[object] = Rational::one();
        AssignmentVector { probs }
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn get(&self, object: usize) -> &Rational {
        &self.probs[object]
    }

    fn row_problems(&self, agent: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        for (j, p) in self.probs.iter().enumerate() {
            if *p < Rational::zero() || *p > Rational::one() {
                out.push(Violation::OutOfRange {
                    agent,
                    object: j,
                    value: p.clone(),
                });
            }
        }
        let sum: Rational = self.probs.iter().sum();
        if !sum.is_one() {
            out.push(Violation::RowSum { agent, sum });
        }
        out
    }
}

/// One assignment vector per agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AssignmentMatrix {
    rows: Vec<AssignmentVector>,
}

impl AssignmentMatrix {
    pub fn new(rows: Vec<AssignmentVector>) -> Self {
        AssignmentMatrix { rows }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        AssignmentMatrix {
            rows: rows.into_iter().map(AssignmentVector::new_unchecked).collect(),
        }
    }

    pub fn rows(&self) -> &[AssignmentVector] {
        &self.rows
    }

    pub fn row(&self, agent: usize) -> &AssignmentVector {
        &self.rows[agent]
    }

    pub fn into_rows(self) -> Vec<AssignmentVector> {
        self.rows
    }
}

/// A single violated feasibility constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    RowSum {
        agent: usize,
        sum: Rational,
    },
    OutOfRange {
        agent: usize,
        object: usize,
        value: Rational,
    },
    Capacity {
        object: usize,
        total: Rational,
        capacity: u32,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum { agent, sum } => {
                write!(f, "row {agent} sums to {} instead of 1", to_canonical(sum))
            }
            Violation::OutOfRange { agent, object, value } => write!(
                f,
                "entry ({agent}, {object}) = {} is outside [0, 1]",
                to_canonical(value)
            ),
            Violation::Capacity {
                object,
                total,
                capacity,
            } => write!(
                f,
                "object {object} assigned {} beyond capacity {capacity}",
                to_canonical(total)
            ),
        }
    }
}

fn join(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Outcome of [`validate_matrix`]; empty means feasible.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            f.write_str("feasible")
        } else {
            f.write_str(&join(&self.violations))
        }
    }
}

/// Lists every violated row-sum, range and capacity constraint of `x`.
pub fn validate_matrix(x: &AssignmentMatrix, s: &Setting) -> Result<ValidationReport, AssignError> {
    if x.rows.len() != s.n {
        return Err(AssignError::Dimension(format!(
            "{} rows for {} agents",
            x.rows.len(),
            s.n
        )));
    }
    if let Some((i, row)) = x.rows.iter().enumerate().find(|(_, r)| r.m() != s.m) {
        return Err(AssignError::Dimension(format!(
            "row {i} has {} entries for {} objects",
            row.m(),
            s.m
        )));
    }
    let mut violations = Vec::new();
    for (i, row) in x.rows.iter().enumerate() {
        violations.extend(row.row_problems(i));
    }
    violations.extend(capacity_problems(x.rows.iter(), s));
    Ok(ValidationReport { violations })
}

fn capacity_problems<'a>(rows: impl Iterator<Item = &'a AssignmentVector>, s: &Setting) -> Vec<Violation> {
    let mut totals = vec![Rational::zero(); s.m];
    for row in rows {
        for (t, p) in totals.iter_mut().zip(&row.probs) {
            *t += p;
        }
    }
    totals
        .into_iter()
        .enumerate()
        .filter(|(j, t)| *t > Rational::from_integer(s.q[*j].into()))
        .map(|(object, total)| Violation::Capacity {
            object,
            total,
            capacity: s.q[object],
        })
        .collect()
}

/// Nonnegative value for each object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UtilityFunction {
    values: Vec<Rational>,
}

impl UtilityFunction {
    pub fn new(values: Vec<Rational>) -> Result<Self, AssignError> {
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| **v < Rational::zero()) {
            return Err(AssignError::InvalidUtility(format!(
                "value {} for object {j} is negative",
                to_canonical(v)
            )));
        }
        Ok(UtilityFunction { values })
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value(&self, object: usize) -> &Rational {
        &self.values[object]
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn min_value(&self) -> Rational {
        self.values.iter().min().cloned().unwrap_or_else(Rational::zero)
    }
}

/// `sum_j u(j) * x_j`, exactly.
pub fn expected_utility(u: &UtilityFunction, x: &AssignmentVector) -> Rational {
    debug_assert_eq!(u.m(), x.m());
    u.values.iter().zip(&x.probs).map(|(a, b)| a * b).sum()
}

/// A mechanism stored as a total table from profiles to assignments.
///
/// Distinct assignment vectors are stored once in `rows`; `cells` holds the
/// row id for each `(profile, agent)` at index `profile * n + agent`.
/// Profiles are numbered in mixed radix `m!` with agent 0 most significant,
/// each digit being the lexicographic index of that agent's order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabulatedMechanism {
    setting: Setting,
    names: Vec<String>,
    orders: Vec<PreferenceOrder>,
    rows: Vec<AssignmentVector>,
    cells: Vec<u32>,
}

impl TabulatedMechanism {
    /// Tabulates `f` over every profile, validating each matrix.
    pub fn build<F>(setting: Setting, names: Vec<String>, mut f: F) -> Result<Self, AssignError>
    where
        F: FnMut(&PreferenceProfile) -> Result<AssignmentMatrix, AssignError>,
    {
        let mut builder = TableBuilder::new(setting, names)?;
        for idx in 0..builder.profile_count {
            let profile = builder.profile_at(idx);
            let matrix = f(&profile)?;
            builder.push(idx, matrix)?;
        }
        Ok(builder.finish())
    }

    /// Default display names `a`, `b`, ...
    pub fn build_default<F>(setting: Setting, f: F) -> Result<Self, AssignError>
    where
        F: FnMut(&PreferenceProfile) -> Result<AssignmentMatrix, AssignError>,
    {
        let names = default_names(setting.m());
        Self::build(setting, names, f)
    }

    pub fn setting(&self) -> &Setting {
        &self.setting
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// All `m!` orders in lexicographic sequence.
    pub fn orders(&self) -> &[PreferenceOrder] {
        &self.orders
    }

    pub fn n(&self) -> usize {
        self.setting.n
    }

    pub fn m(&self) -> usize {
        self.setting.m
    }

    pub fn profile_count(&self) -> usize {
        self.cells.len() / self.setting.n
    }

    /// Distinct assignment vectors appearing in the table.
    pub fn distinct_rows(&self) -> &[AssignmentVector] {
        &self.rows
    }

    pub fn row_by_id(&self, id: u32) -> &AssignmentVector {
        &self.rows[id as usize]
    }

    pub fn row_id(&self, profile_index: usize, agent: usize) -> u32 {
        self.cells[profile_index * self.setting.n + agent]
    }

    /// Digit weight of `agent` in the profile numbering.
    pub fn radix_weight(&self, agent: usize) -> usize {
        let base = self.orders.len();
        (agent + 1..self.setting.n).fold(1, |w, _| w * base)
    }

    /// Lexicographic index of `agent`'s order within profile `profile_index`.
    pub fn digit(&self, profile_index: usize, agent: usize) -> usize {
        (profile_index / self.radix_weight(agent)) % self.orders.len()
    }

    pub fn profile_at(&self, profile_index: usize) -> PreferenceProfile {
        profile_from_index(&self.orders, self.setting.n, profile_index)
    }

    pub fn index_of(&self, profile: &PreferenceProfile) -> Result<usize, AssignError> {
        if profile.n() != self.setting.n {
            return Err(AssignError::Dimension(format!(
                "profile has {} orders for {} agents",
                profile.n(),
                self.setting.n
            )));
        }
        let base = self.orders.len();
        let mut idx = 0;
        for order in profile.orders() {
            if order.m() != self.setting.m {
                return Err(AssignError::Dimension(format!(
                    "order over {} objects in a {}-object setting",
                    order.m(),
                    self.setting.m
                )));
            }
            idx = idx * base + order.lex_index();
        }
        Ok(idx)
    }

    /// Assignment vector of `agent` at `profile`.
    pub fn assignment_of(&self, profile: &PreferenceProfile, agent: usize) -> Result<&AssignmentVector, AssignError> {
        let idx = self.index_of(profile)?;
        Ok(self.row_by_id(self.row_id(idx, agent)))
    }

    pub fn matrix(&self, profile_index: usize) -> AssignmentMatrix {
        AssignmentMatrix::new(
            (0..self.setting.n)
                .map(|i| self.row_by_id(self.row_id(profile_index, i)).clone())
                .collect(),
        )
    }

    pub fn profile_label(&self, profile: &PreferenceProfile) -> String {
        format!("[{}]", profile.display_with(&self.names).join(", "))
    }

    /// Rebuilds the table with one cell replaced, validating the new matrix.
    pub fn with_cell(&self, profile_index: usize, agent: usize, row: AssignmentVector) -> Result<Self, AssignError> {
        let mut matrix = self.matrix(profile_index);
        matrix.rows[agent] = row;
        let mut builder = TableBuilder::new(self.setting.clone(), self.names.clone())?;
        for idx in 0..builder.profile_count {
            let m = if idx == profile_index {
                matrix.clone()
            } else {
                self.matrix(idx)
            };
            builder.push(idx, m)?;
        }
        Ok(builder.finish())
    }
}

pub(crate) fn profile_from_index(orders: &[PreferenceOrder], n: usize, mut idx: usize) -> PreferenceProfile {
    let base = orders.len();
    let mut digits = vec![0; n];
    for d in digits.iter_mut().rev() {
        *d = idx % base;
        idx /= base;
    }
    PreferenceProfile::new(digits.into_iter().map(|d| orders[d].clone()).collect()).expect("orders share one universe")
}

/// Incremental table construction used by tabulation and file loading.
pub(crate) struct TableBuilder {
    setting: Setting,
    names: Vec<String>,
    orders: Vec<PreferenceOrder>,
    rows: Vec<AssignmentVector>,
    index: HashMap<AssignmentVector, u32>,
    row_ok: Vec<bool>,
    cells: Vec<u32>,
    pub(crate) profile_count: usize,
}

impl TableBuilder {
    pub(crate) fn new(setting: Setting, names: Vec<String>) -> Result<Self, AssignError> {
        if names.len() != setting.m {
            return Err(AssignError::Dimension(format!(
                "{} object names for {} objects",
                names.len(),
                setting.m
            )));
        }
        let count = setting.profile_count();
        if count > MAX_TABLE_PROFILES as u128 {
            return Err(AssignError::TableTooLarge {
                profiles: count,
                limit: MAX_TABLE_PROFILES,
            });
        }
        let orders = all_preference_orders(setting.m)?;
        Ok(TableBuilder {
            cells: Vec::with_capacity(count as usize * setting.n),
            profile_count: count as usize,
            setting,
            names,
            orders,
            rows: Vec::new(),
            index: HashMap::new(),
            row_ok: Vec::new(),
        })
    }

    pub(crate) fn profile_at(&self, idx: usize) -> PreferenceProfile {
        profile_from_index(&self.orders, self.setting.n, idx)
    }

    pub(crate) fn label(&self, idx: usize) -> String {
        format!("[{}]", self.profile_at(idx).display_with(&self.names).join(", "))
    }

    /// Appends the matrix for profile `idx`; profiles must arrive in order.
    pub(crate) fn push(&mut self, idx: usize, matrix: AssignmentMatrix) -> Result<(), AssignError> {
        debug_assert_eq!(self.cells.len(), idx * self.setting.n);
        if matrix.rows.len() != self.setting.n || matrix.rows.iter().any(|r| r.m() != self.setting.m) {
            return Err(AssignError::BadEntry {
                profile: self.label(idx),
                reason: format!(
                    "assignment must be {} rows of {} entries",
                    self.setting.n, self.setting.m
                ),
            });
        }
        let mut violations = Vec::new();
        for (agent, row) in matrix.rows.iter().enumerate() {
            let id = match self.index.get(row) {
                Some(&id) => id,
                None => {
                    let id = self.rows.len() as u32;
                    self.row_ok.push(row.row_problems(0).is_empty());
                    self.rows.push(row.clone());
                    self.index.insert(row.clone(), id);
                    id
                }
            };
            if !self.row_ok[id as usize] {
                violations.extend(row.row_problems(agent));
            }
            self.cells.push(id);
        }
        violations.extend(capacity_problems(matrix.rows.iter(), &self.setting));
        if !violations.is_empty() {
            return Err(AssignError::Infeasible {
                profile: self.label(idx),
                violations: join(&violations),
            });
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> TabulatedMechanism {
        TabulatedMechanism {
            setting: self.setting,
            names: self.names,
            orders: self.orders,
            rows: self.rows,
            cells: self.cells,
        }
    }
}
