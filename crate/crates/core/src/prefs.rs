//! Strict preference orders over a finite object set.
//!
//! Objects are dense indices `0..m`. Display names (`a`, `b`, ...) only
//! matter when orders are printed or parsed as `"a>b>c"`.

use std::fmt;

use thiserror::Error;

/// Largest object count for which all `m!` orders are enumerated.
pub const MAX_ENUMERATED_OBJECTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefsError {
    #[error("cannot enumerate preference orders for m = {0}: need 1 <= m <= {max}", max = MAX_ENUMERATED_OBJECTS)]
    EnumerationLimit(usize),
    #[error("object {object} is not among the {m} objects of this order")]
    UnknownObject { object: usize, m: usize },
    #[error("ranking {0:?} is not a permutation of 0..{1}")]
    NotAPermutation(Vec<usize>, usize),
    #[error("cannot parse preference order {text:?}: {reason}")]
    Parse { text: String, reason: String },
    #[error("orders over different object sets ({0} vs {1} objects)")]
    UniverseMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(pub usize);

impl ObjectId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Default display name of object `index`: `a`, `b`, ..., `z`, then `o26`, ...
pub fn default_name(index: usize) -> String {
    if index < 26 {
        char::from(b'a' + index as u8).to_string()
    } else {
        format!("o{index}")
    }
}

pub fn default_names(m: usize) -> Vec<String> {
    (0..m).map(default_name).collect()
}

/// A strict ranking of all `m` objects, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PreferenceOrder {
    ranking: Vec<ObjectId>,
}

impl PreferenceOrder {
    pub fn new(ranking: Vec<ObjectId>) -> Result<Self, PrefsError> {
        let m = ranking.len();
        let mut seen = vec![false; m];
        for o in &ranking {
            if o.0 >= m || seen[o.0] {
                return Err(PrefsError::NotAPermutation(ranking.iter().map(|o| o.0).collect(), m));
            }
            seen[o.0] = true;
        }
        Ok(PreferenceOrder { ranking })
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self, PrefsError> {
        Self::new(indices.iter().copied().map(ObjectId).collect())
    }

    /// The order `0 > 1 > ... > m-1`.
    pub fn identity(m: usize) -> Self {
        PreferenceOrder {
            ranking: (0..m).map(ObjectId).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.ranking.len()
    }

    pub fn ranking(&self) -> &[ObjectId] {
        &self.ranking
    }

    pub fn object_at(&self, position: usize) -> ObjectId {
        self.ranking[position]
    }

    /// Zero-based position of `object` in the ranking.
    pub fn position(&self, object: ObjectId) -> Result<usize, PrefsError> {
        self.ranking
            .iter()
            .position(|&o| o == object)
            .ok_or(PrefsError::UnknownObject {
                object: object.0,
                m: self.m(),
            })
    }

    /// Number of objects preferred to `object`, plus one.
    pub fn rank(&self, object: ObjectId) -> Result<usize, PrefsError> {
        Ok(self.position(object)? + 1)
    }

    /// True iff `a` is ranked strictly above `b`.
    pub fn prefers(&self, a: ObjectId, b: ObjectId) -> bool {
        let pa = self.position(a).expect("object in universe");
        let pb = self.position(b).expect("object in universe");
        pa < pb
    }

    /// Position of every object, indexed by object.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.m()];
        for (k, o) in self.ranking.iter().enumerate() {
            pos[o.0] = k;
        }
        pos
    }

    /// The order obtained by swapping the objects at `position` and `position + 1`.
    pub fn swap_adjacent(&self, position: usize) -> PreferenceOrder {
        let mut ranking = self.ranking.clone();
        ranking.swap(position, position + 1);
        PreferenceOrder { ranking }
    }

    /// Position in the lexicographic enumeration of all `m!` orders.
    pub fn lex_index(&self) -> usize {
        let m = self.m();
        let mut used = vec![false; m];
        let mut index = 0;
        for (k, o) in self.ranking.iter().enumerate() {
            let smaller_unused = (0..o.0).filter(|&j| !used[j]).count();
            index += smaller_unused * factorial(m - 1 - k);
            used[o.0] = true;
        }
        index
    }

    /// Inverse of [`lex_index`](Self::lex_index).
    pub fn from_lex_index(m: usize, mut index: usize) -> PreferenceOrder {
        let mut remaining: Vec<usize> = (0..m).collect();
        let mut ranking = Vec::with_capacity(m);
        for k in 0..m {
            let block = factorial(m - 1 - k);
            let pick = index / block;
            index %= block;
            ranking.push(ObjectId(remaining.remove(pick)));
        }
        PreferenceOrder { ranking }
    }

    /// Parse `"a>b>c"` against a list of display names.
    pub fn parse(text: &str, names: &[String]) -> Result<Self, PrefsError> {
        let err = |reason: String| PrefsError::Parse {
            text: text.to_string(),
            reason,
        };
        let mut ranking = Vec::with_capacity(names.len());
        for token in text.split('>') {
            let token = token.trim();
            let idx = names
                .iter()
                .position(|n| n == token)
                .ok_or_else(|| err(format!("unknown object {token:?}")))?;
            ranking.push(ObjectId(idx));
        }
        if ranking.len() != names.len() {
            return Err(err(format!(
                "expected {} objects, found {}",
                names.len(),
                ranking.len()
            )));
        }
        Self::new(ranking).map_err(|_| err("repeated object".to_string()))
    }

    /// Parse with default names, inferring `m` from the number of tokens.
    pub fn parse_default(text: &str) -> Result<Self, PrefsError> {
        let m = text.split('>').count();
        Self::parse(text, &default_names(m))
    }

    pub fn display_with(&self, names: &[String]) -> String {
        self.ranking
            .iter()
            .map(|o| names[o.0].as_str())
            .collect::<Vec<_>>()
            .join(">")
    }
}

impl fmt::Display for PreferenceOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&default_names(self.m())))
    }
}

/// One reported order per agent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PreferenceProfile {
    orders: Vec<PreferenceOrder>,
}

impl PreferenceProfile {
    pub fn new(orders: Vec<PreferenceOrder>) -> Result<Self, PrefsError> {
        if let Some(first) = orders.first() {
            for o in &orders {
                if o.m() != first.m() {
                    return Err(PrefsError::UniverseMismatch(first.m(), o.m()));
                }
            }
        }
        Ok(PreferenceProfile { orders })
    }

    pub fn orders(&self) -> &[PreferenceOrder] {
        &self.orders
    }

    pub fn n(&self) -> usize {
        self.orders.len()
    }

    pub fn order(&self, agent: usize) -> &PreferenceOrder {
        &self.orders[agent]
    }

    /// Same profile with agent `agent` reporting `order` instead.
    pub fn with_report(&self, agent: usize, order: PreferenceOrder) -> PreferenceProfile {
        let mut orders = self.orders.clone();
        orders[agent] = order;
        PreferenceProfile { orders }
    }

    pub fn display_with(&self, names: &[String]) -> Vec<String> {
        self.orders.iter().map(|o| o.display_with(names)).collect()
    }
}

pub fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// All `m!` orders in lexicographic sequence of their rankings.
pub fn all_preference_orders(m: usize) -> Result<Vec<PreferenceOrder>, PrefsError> {
    if m == 0 || m > MAX_ENUMERATED_OBJECTS {
        return Err(PrefsError::EnumerationLimit(m));
    }
    Ok((0..factorial(m))
        .map(|i| PreferenceOrder::from_lex_index(m, i))
        .collect())
}

/// Orders reachable from `order` by one swap of adjacently ranked objects,
/// listed by the position of the swap (top pair first).
pub fn neighborhood(order: &PreferenceOrder) -> Vec<PreferenceOrder> {
    (0..order.m().saturating_sub(1))
        .map(|k| order.swap_adjacent(k))
        .collect()
}

pub fn is_neighbor(p: &PreferenceOrder, q: &PreferenceOrder) -> bool {
    if p.m() != q.m() {
        return false;
    }
    let diff: Vec<usize> = (0..p.m()).filter(|&k| p.ranking[k] != q.ranking[k]).collect();
    diff.len() == 2 && diff[1] == diff[0] + 1 && p.swap_adjacent(diff[0]) == *q
}

/// Bubble-sort path from `from` to `to`.
///
/// Phase by phase, the highest object under `to` that is not yet in its
/// final position is swapped upward until it gets there. The returned
/// sequence starts with `from` and ends with `to`.
pub fn canonical_transition(from: &PreferenceOrder, to: &PreferenceOrder) -> Result<Vec<PreferenceOrder>, PrefsError> {
    if from.m() != to.m() {
        return Err(PrefsError::UniverseMismatch(from.m(), to.m()));
    }
    let mut current = from.clone();
    let mut path = vec![current.clone()];
    for target_pos in 0..to.m() {
        let object = to.ranking[target_pos];
        let mut pos = current.position(object)?;
        while pos > target_pos {
            current = current.swap_adjacent(pos - 1);
            path.push(current.clone());
            pos -= 1;
        }
    }
    Ok(path)
}
