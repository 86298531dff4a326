//! Brute-force reference implementations of the two zoo mechanisms,
//! compared cell by cell against the tabulated versions.

use num_traits::{One, Zero};

use psp_core::assign::{tabulate_ps, tabulate_rsd, Setting, TabulatedMechanism};
use psp_core::rational::Rational;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn rsd_reference(prefs: &[Vec<usize>], q: &[u32]) -> Vec<Vec<Rational>> {
    let n = prefs.len();
    let m = q.len();
    let orders = permutations(n);
    let weight = Rational::new(1.into(), (orders.len() as i64).into());
    let mut out = vec![vec![Rational::zero(); m]; n];
    for order in &orders {
        let mut left = q.to_vec();
        for &agent in order {
            if let Some(&obj) = prefs[agent].iter().find(|&&o| left[o] > 0) {
                left[obj] -= 1;
                out[agent][obj] += &weight;
            }
        }
    }
    out
}

/// Simultaneous eating at unit speed until every agent has one unit.
fn ps_reference(prefs: &[Vec<usize>], q: &[u32]) -> Vec<Vec<Rational>> {
    let n = prefs.len();
    let m = q.len();
    let mut supply: Vec<Rational> = q.iter().map(|&c| Rational::from_integer(c.into())).collect();
    let mut out = vec![vec![Rational::zero(); m]; n];
    let mut time = Rational::zero();
    while time < Rational::one() {
        let target: Vec<Option<usize>> = prefs
            .iter()
            .map(|p| p.iter().copied().find(|&o| supply[o] > Rational::zero()))
            .collect();
        let mut eaters = vec![0i64; m];
        for t in target.iter().flatten() {
            eaters[*t] += 1;
        }
        let mut step = Rational::one() - &time;
        for o in 0..m {
            if eaters[o] > 0 {
                let finish = &supply[o] / Rational::from_integer(eaters[o].into());
                if finish < step {
                    step = finish;
                }
            }
        }
        if target.iter().all(Option::is_none) {
            break;
        }
        for (agent, t) in target.iter().enumerate() {
            if let Some(o) = t {
                out[agent][*o] += &step;
                supply[*o] -= &step;
            }
        }
        time += step;
    }
    out
}

type Rule = fn(&[Vec<usize>], &[u32]) -> Vec<Vec<Rational>>;

fn compare(mech: &TabulatedMechanism, rule: Rule) {
    let q = mech.setting().q().to_vec();
    for idx in 0..mech.profile_count() {
        let profile = mech.profile_at(idx);
        let prefs: Vec<Vec<usize>> = profile
            .orders()
            .iter()
            .map(|o| o.ranking().iter().map(|x| x.0).collect())
            .collect();
        let expected = rule(&prefs, &q);
        for (agent, row) in expected.iter().enumerate() {
            assert_eq!(
                mech.assignment_of(&profile, agent).unwrap().probs(),
                row.as_slice(),
                "profile {idx}, agent {agent}"
            );
        }
    }
}

#[test]
fn rsd_matches_brute_force() {
    for (n, m) in [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2)] {
        compare(&tabulate_rsd(&Setting::balanced(n, m).unwrap()).unwrap(), rsd_reference);
    }
}

#[test]
fn ps_matches_eating_simulation() {
    for (n, m) in [(2, 2), (2, 3), (3, 2), (3, 3), (4, 3)] {
        compare(&tabulate_ps(&Setting::balanced(n, m).unwrap()).unwrap(), ps_reference);
    }
}

#[test]
fn ps_with_surplus_capacity() {
    let s = Setting::new(2, 3, vec![2, 1, 1]).unwrap();
    compare(&tabulate_ps(&s).unwrap(), ps_reference);
}
