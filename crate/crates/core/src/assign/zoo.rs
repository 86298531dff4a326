//! Reference mechanisms used as a test corpus.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{AssignError, AssignmentMatrix, AssignmentVector, Setting, TabulatedMechanism};
use crate::prefs::{factorial, PreferenceProfile};
use crate::rational::Rational;

pub const MAX_ZOO_AGENTS: usize = 5;
pub const MAX_ZOO_OBJECTS: usize = 5;

fn check_zoo_size(s: &Setting) -> Result<(), AssignError> {
    if s.n() > MAX_ZOO_AGENTS || s.m() > MAX_ZOO_OBJECTS {
        return Err(AssignError::SizeGuard(format!(
            "zoo mechanisms need n <= {MAX_ZOO_AGENTS} and m <= {MAX_ZOO_OBJECTS} (got n = {}, m = {})",
            s.n(),
            s.m()
        )));
    }
    Ok(())
}

/// Random serial dictatorship: the uniform average over all `n!` priority
/// orders of the serial dictatorship outcome.
pub fn tabulate_rsd(s: &Setting) -> Result<TabulatedMechanism, AssignError> {
    check_zoo_size(s)?;
    tabulate_anonymous(s, rsd)
}

/// Probabilistic serial: simultaneous eating at unit speed.
pub fn tabulate_ps(s: &Setting) -> Result<TabulatedMechanism, AssignError> {
    check_zoo_size(s)?;
    tabulate_anonymous(s, ps)
}

type Rule = fn(&[Vec<usize>], &[u32]) -> Vec<Vec<Rational>>;

/// Both reference mechanisms treat agents symmetrically, so the outcome is
/// computed once per multiset of reports and handed back by report.
fn tabulate_anonymous(s: &Setting, rule: Rule) -> Result<TabulatedMechanism, AssignError> {
    let mut memo: HashMap<Vec<usize>, Vec<(usize, AssignmentVector)>> = HashMap::new();
    let q = s.q().to_vec();
    TabulatedMechanism::build_default(s.clone(), |profile: &PreferenceProfile| {
        let keys: Vec<usize> = profile.orders().iter().map(|o| o.lex_index()).collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        let outcome = memo.entry(sorted.clone()).or_insert_with(|| {
            let mut agents: Vec<usize> = (0..keys.len()).collect();
            agents.sort_by_key(|&i| keys[i]);
            let reports: Vec<Vec<usize>> = agents
                .iter()
                .map(|&i| profile.order(i).ranking().iter().map(|o| o.0).collect())
                .collect();
            let rows = rule(&reports, &q);
            sorted
                .iter()
                .zip(rows)
                .map(|(&k, r)| (k, AssignmentVector::new_unchecked(r)))
                .collect()
        });
        let rows = keys
            .iter()
            .map(|k| {
                outcome
                    .iter()
                    .find(|(key, _)| key == k)
                    .map(|(_, r)| r.clone())
                    .expect("every report appears in the sorted profile")
            })
            .collect();
        Ok(AssignmentMatrix::new(rows))
    })
}

fn rsd(reports: &[Vec<usize>], q: &[u32]) -> Vec<Vec<Rational>> {
    let n = reports.len();
    let m = q.len();
    let mut counts = vec![vec![0u64; m]; n];
    let mut priority: Vec<usize> = (0..n).collect();
    loop {
        let mut left = q.to_vec();
        for &i in &priority {
            let pick = reports[i]
                .iter()
                .copied()
                .find(|&j| left[j] > 0)
                .expect("total capacity covers all agents");
            left[pick] -= 1;
            counts[i][pick] += 1;
        }
        if !next_permutation(&mut priority) {
            break;
        }
    }
    let total = BigInt::from(factorial(n));
    counts
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|c| Rational::new(BigInt::from(c), total.clone()))
                .collect()
        })
        .collect()
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn ps(reports: &[Vec<usize>], q: &[u32]) -> Vec<Vec<Rational>> {
    let n = reports.len();
    let m = q.len();
    let mut left: Vec<Rational> = q.iter().map(|&c| Rational::from_integer(c.into())).collect();
    let mut x = vec![vec![Rational::zero(); m]; n];
    let mut t = Rational::zero();
    while t < Rational::one() {
        let targets: Vec<usize> = reports
            .iter()
            .map(|r| {
                r.iter()
                    .copied()
                    .find(|&j| left[j] > Rational::zero())
                    .expect("supply remains while time remains")
            })
            .collect();
        let mut eaters = vec![0i64; m];
        for &j in &targets {
            eaters[j] += 1;
        }
        let mut dt = Rational::one() - &t;
        for j in 0..m {
            if eaters[j] > 0 {
                let until_gone = &left[j] / Rational::from_integer(eaters[j].into());
                if until_gone < dt {
                    dt = until_gone;
                }
            }
        }
        for (i, &j) in targets.iter().enumerate() {
            x[i][j] += &dt;
        }
        for j in 0..m {
            if eaters[j] > 0 {
                left[j] -= &dt * Rational::from_integer(eaters[j].into());
            }
        }
        t += dt;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::PreferenceOrder;
    use crate::rational::{int, ratio};

    fn profile(orders: &[&str]) -> PreferenceProfile {
        PreferenceProfile::new(
            orders
                .iter()
                .map(|o| PreferenceOrder::parse_default(o).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn rsd_single_dictator() {
        let mech = tabulate_rsd(&Setting::new(1, 2, vec![1, 1]).unwrap()).unwrap();
        let x = mech.assignment_of(&profile(&["a>b"]), 0).unwrap();
        assert_eq!(x.probs(), &[int(1), int(0)]);
    }

    #[test]
    fn ps_symmetric_eating() {
        let mech = tabulate_ps(&Setting::new(2, 2, vec![1, 1]).unwrap()).unwrap();
        let p = profile(&["a>b", "a>b"]);
        for i in 0..2 {
            assert_eq!(mech.assignment_of(&p, i).unwrap().probs(), &[ratio(1, 2), ratio(1, 2)]);
        }
    }

    #[test]
    fn ps_three_agents_known_outcome() {
        // a is shared until 1/2, then agent 0 joins agent 2 on the remaining half of b.
        let mech = tabulate_ps(&Setting::new(3, 3, vec![1, 1, 1]).unwrap()).unwrap();
        let p = profile(&["a>b>c", "a>c>b", "b>a>c"]);
        assert_eq!(
            mech.assignment_of(&p, 0).unwrap().probs(),
            &[ratio(1, 2), ratio(1, 4), ratio(1, 4)]
        );
        assert_eq!(
            mech.assignment_of(&p, 1).unwrap().probs(),
            &[ratio(1, 2), int(0), ratio(1, 2)]
        );
        assert_eq!(
            mech.assignment_of(&p, 2).unwrap().probs(),
            &[int(0), ratio(3, 4), ratio(1, 4)]
        );
    }

    #[test]
    fn rsd_two_agents_same_order() {
        let mech = tabulate_rsd(&Setting::new(2, 3, vec![1, 1, 1]).unwrap()).unwrap();
        let p = profile(&["a>b>c", "a>b>c"]);
        assert_eq!(
            mech.assignment_of(&p, 1).unwrap().probs(),
            &[ratio(1, 2), ratio(1, 2), int(0)]
        );
    }

    #[test]
    fn anonymity_memo_respects_agent_identity() {
        let mech = tabulate_rsd(&Setting::new(2, 2, vec![1, 1]).unwrap()).unwrap();
        let p = profile(&["b>a", "a>b"]);
        assert_eq!(mech.assignment_of(&p, 0).unwrap().probs(), &[int(0), int(1)]);
        assert_eq!(mech.assignment_of(&p, 1).unwrap().probs(), &[int(1), int(0)]);
    }

    #[test]
    fn size_guard() {
        let s = Setting::new(6, 6, vec![1; 6]).unwrap();
        assert!(matches!(tabulate_ps(&s), Err(AssignError::SizeGuard(_))));
    }

    #[test]
    fn capacities_above_one() {
        let mech = tabulate_ps(&Setting::balanced(3, 2).unwrap()).unwrap();
        let p = profile(&["a>b", "a>b", "a>b"]);
        assert_eq!(mech.assignment_of(&p, 0).unwrap().probs(), &[ratio(2, 3), ratio(1, 3)]);
    }
}
