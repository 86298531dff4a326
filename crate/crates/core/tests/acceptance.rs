//! Acceptance suite. Each test prints one PASS/FAIL line to the terminal
//! (bypassing output capture) before asserting.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use psp_core::analysis::Analyzer;
use psp_core::assign::{expected_utility, AssignmentVector, UtilityFunction};
use psp_core::counterexample::{
    adjusted_deltas, build_phi, case_of, feasibility_interval, find_witness, local_psp_interval, phi_row, Case,
    PhiParams, RationalRange,
};
use psp_core::dominance::{delta_partial_sums, r_discounted_dominates, sd_dominates};
use psp_core::geometry::{
    adaptive_target, consistent, geometric_utility, passed_sequence, transition_ordering, urbi_passage_witness,
    urbi_satisfies,
};
use psp_core::interval::rational_power;
use psp_core::prefs::{all_preference_orders, canonical_transition, neighborhood, ObjectId, PreferenceOrder};
use psp_core::rational::{int, pow, ratio, to_canonical, Rational};

fn report(number: u32, title: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    writeln!(err, "criterion {number} [{verdict}] {title}: {detail}").unwrap();
}

fn order(text: &str) -> PreferenceOrder {
    PreferenceOrder::parse_default(text).unwrap()
}

fn random_lottery(rng: &mut ChaCha8Rng, m: usize) -> AssignmentVector {
    // Cut points on a grid of 1/60 give exact lotteries with small denominators.
    let mut cuts: Vec<i64> = (0..m - 1).map(|_| rng.gen_range(0..=60)).collect();
    cuts.push(0);
    cuts.push(60);
    cuts.sort_unstable();
    AssignmentVector::new(cuts.windows(2).map(|w| ratio(w[1] - w[0], 60)).collect()).unwrap()
}

fn random_order(rng: &mut ChaCha8Rng, m: usize) -> PreferenceOrder {
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(rng);
    PreferenceOrder::from_indices(&idx).unwrap()
}

#[test]
fn counterexample_intervals() {
    let start = Instant::now();
    let mut problems = Vec::new();
    let f10 = feasibility_interval(&int(10)).unwrap();
    if f10 != RationalRange::new(ratio(10, 991), ratio(1, 10)) {
        problems.push(format!("feasibility(10) = {f10}"));
    }
    let i10 = local_psp_interval(&int(10)).unwrap().interval;
    let expected = RationalRange::new(ratio(9000, 119889), ratio(9019, 98290));
    if i10 != expected {
        problems.push(format!("I_10 = {i10}, expected {expected}"));
    }
    for s in [3, 5, 10, 100] {
        let s = int(s);
        let i = local_psp_interval(&s).unwrap().interval;
        if !i.is_subset_of(&feasibility_interval(&s).unwrap()) {
            problems.push(format!("I_{s} = {i} not inside feasibility"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(1) {
        problems.push(format!("took {elapsed:?}"));
    }
    let ok = problems.is_empty();
    report(
        1,
        "counterexample intervals",
        ok,
        &if ok { "exact".into() } else { problems.join("; ") },
    );
    assert!(ok, "{problems:?}");
}

#[test]
fn local_check_on_alpha_grid() {
    let start = Instant::now();
    let s = int(10);
    let r = ratio(1, 10);
    let i10 = RationalRange::new(ratio(9000, 119889), ratio(9019, 98290));
    let f = feasibility_interval(&s).unwrap();
    let mut alphas: Vec<Rational> = (0..=10).map(|k| &f.lo + f.width() * ratio(k, 10)).collect();
    alphas.push(i10.lo.clone());
    alphas.push(i10.hi.clone());
    let mut mismatches = Vec::new();
    for alpha in &alphas {
        let mech = build_phi(&PhiParams::new(s.clone(), alpha.clone()).unwrap()).unwrap();
        let holds = Analyzer::new(&mech).check_r_psp(&r, true).unwrap().holds;
        if holds != i10.contains(alpha) {
            mismatches.push(format!("alpha = {} (local check {holds})", to_canonical(alpha)));
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty() && elapsed < Duration::from_secs(5);
    let detail = if ok {
        format!("{} grid points agree with {i10}", alphas.len())
    } else {
        format!("disagreements with {i10}: {}; {elapsed:?}", mismatches.join(", "))
    };
    report(2, "local check on alpha grid", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn case_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut problems = Vec::new();
    let orders = all_preference_orders(4).unwrap();
    for _ in 0..100 {
        let s = Rational::new(rng.gen_range(11..=2000).into(), 10.into());
        let f = feasibility_interval(&s).unwrap();
        let alpha = &f.lo + f.width() * ratio(rng.gen_range(0..=1000), 1000);
        let p = PhiParams::new(s.clone(), alpha.clone()).unwrap();

        let d3 = adjusted_deltas(&p, &order("c>a>d>b"), &order("a>c>d>b"));
        if !d3[1].is_zero() {
            problems.push(format!("case III delta_2 = {} at s = {s}", to_canonical(&d3[1])));
        }
        let d4 = adjusted_deltas(&p, &order("a>c>b>d"), &order("c>a>b>d"));
        let one_minus = Rational::one() - &alpha;
        if d4[2] != one_minus {
            problems.push(format!(
                "case IV delta_3 = {} but 1 - alpha = {} at s = {s}",
                to_canonical(&d4[2]),
                to_canonical(&one_minus)
            ));
        }
        for truth in &orders {
            for mis in neighborhood(truth) {
                if case_of(truth, &mis).is_some_and(|c| c.is_dominance_case())
                    && !sd_dominates(truth, &phi_row(&p, truth), &phi_row(&p, &mis))
                {
                    problems.push(format!("{truth} -> {mis} not dominated at s = {s}"));
                }
            }
        }
    }
    let ok = problems.is_empty();
    let detail = if ok {
        "100 random parameters".to_string()
    } else {
        format!("{} failures, first: {}", problems.len(), problems[0])
    };
    report(3, "case closed forms", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn witness_search() {
    let mut problems = Vec::new();
    let mut found = Vec::new();
    let truth = order("a>b>c>d");
    let mis = order("c>a>b>d");
    for eps in [int(1), ratio(1, 2), ratio(1, 4)] {
        let start = Instant::now();
        let cert = match find_witness(&eps, &int(1_000_000)) {
            Ok(c) => c,
            Err(e) => {
                problems.push(format!("epsilon {eps}: {e}"));
                continue;
            }
        };
        let p = &cert.params;
        let s = p.s().clone();
        let r = s.recip();
        let mech = build_phi(p).unwrap();
        let an = Analyzer::new(&mech);
        if !an.check_r_psp(&r, true).unwrap().holds {
            problems.push(format!("epsilon {eps}: local check fails at s = {s}"));
        }
        // The violating utility must satisfy bounded indifference at r^{2-eps}.
        let target = rational_power(&r, &(int(2) - &eps), 64);
        let u = geometric_utility(&truth, &cert.utility_ratio).unwrap();
        if u != cert.utility || cert.utility_ratio > *target.lo() || !urbi_satisfies(&u, &cert.utility_ratio) {
            problems.push(format!("epsilon {eps}: utility not within the required level"));
        }
        let gain = expected_utility(&u, &phi_row(p, &mis)) - expected_utility(&u, &phi_row(p, &truth));
        if !gain.is_positive() || gain != cert.gain {
            problems.push(format!("epsilon {eps}: gain {}", to_canonical(&gain)));
        }
        let (global, _) = an.max_degree(false);
        let r2 = &r * &r;
        if !(*global.lower() >= r2 && global.upper() < target.lo()) {
            problems.push(format!("epsilon {eps}: r_global = {global} outside [r^2, r^(2-eps))"));
        }
        if global.width() > ratio(1, 1_000_000_000) {
            problems.push(format!(
                "epsilon {eps}: bracket width {}",
                to_canonical(&global.width())
            ));
        }
        let elapsed = start.elapsed();
        if elapsed > Duration::from_secs(60) {
            problems.push(format!("epsilon {eps}: took {elapsed:?}"));
        }
        found.push(format!("eps={} s={}", to_canonical(&eps), to_canonical(&s)));
    }
    let ok = problems.is_empty();
    let detail = if ok { found.join(", ") } else { problems.join("; ") };
    report(4, "witness search", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn squared_bound_on_corpus() {
    let start = Instant::now();
    let mut problems = Vec::new();
    for e in common::corpus() {
        match Analyzer::new(&e.mech).verify_theorem1() {
            Ok(rep) if rep.theorem1_ok => {}
            Ok(rep) => problems.push(format!("{}: {rep}", e.name)),
            Err(err) => problems.push(format!("{}: {err}", e.name)),
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(300) {
        problems.push(format!("took {elapsed:?}"));
    }
    let ok = problems.is_empty();
    let detail = if ok {
        format!("{} mechanisms in {elapsed:.1?}", common::corpus().len())
    } else {
        problems.join("; ")
    };
    report(5, "r_global >= r_local^2 on corpus", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn local_sufficiency_on_corpus() {
    let mut problems = Vec::new();
    for e in common::corpus() {
        let an = Analyzer::new(&e.mech);
        if an.check_sd_sp(true).holds != an.check_sd_sp(false).holds {
            problems.push(format!("{}: SD", e.name));
        }
        if an.check_ld_sp(true).holds != an.check_ld_sp(false).holds {
            problems.push(format!("{}: LD", e.name));
        }
    }
    let ok = problems.is_empty();
    let detail = if ok {
        format!("{} mechanisms", common::corpus().len())
    } else {
        problems.join("; ")
    };
    report(6, "local and global SD/LD checks agree", ok, &detail);
    assert!(ok, "{detail}");
}

/// A utility consistent with `p` that satisfies bounded indifference at `level`.
fn random_bounded_utility(rng: &mut ChaCha8Rng, p: &PreferenceOrder, level: &Rational) -> UtilityFunction {
    let m = p.m();
    let offset = ratio(rng.gen_range(0..=5), 4);
    let mut values = vec![Rational::zero(); m];
    let mut current = Rational::one();
    for (k, o) in p.ranking().iter().enumerate() {
        if k + 1 == m {
            values[o.0] = offset.clone();
            break;
        }
        values[o.0] = &current + &offset;
        current = &current * level * ratio(rng.gen_range(1..=16), 16);
    }
    UtilityFunction::new(values).unwrap()
}

/// Whether some consecutive pair of `p` attains the bound `level` exactly.
fn on_boundary(u: &UtilityFunction, p: &PreferenceOrder, level: &Rational) -> bool {
    let ranking = p.ranking();
    let low = u.value(ranking[ranking.len() - 1].0);
    ranking
        .windows(2)
        .any(|w| u.value(w[1].0) - low == (u.value(w[0].0) - low) * level && u.value(w[1].0) != low)
}

#[test]
fn path_geometry() {
    let start = Instant::now();
    let r = ratio(1, 10);
    let r2 = &r * &r;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut undefined = 0usize;
    let mut orderings = 0usize;
    for i in 0..1000 {
        let m = [3, 4, 5][i % 3];
        let pt = random_order(&mut rng, m);
        let pf = random_order(&mut rng, m);
        let u = random_bounded_utility(&mut rng, &pt, &r2);
        assert!(consistent(&u, &pt) && urbi_satisfies(&u, &r2));
        let tag = if on_boundary(&u, &pt, &r2) {
            " [u on boundary]"
        } else {
            ""
        };
        let (_, seg) = match adaptive_target(&u, &pt, &pf, &r) {
            Ok(x) => x,
            Err(e) => {
                failures.push(format!("{pt} -> {pf}{tag}: {e}"));
                continue;
            }
        };
        let seq = passed_sequence(&seg).unwrap();
        if seq.orders != canonical_transition(&pt, &pf).unwrap() {
            failures.push(format!(
                "{pt} -> {pf}{tag}: sequence differs from the canonical transition"
            ));
            continue;
        }
        match urbi_passage_witness(&seg, &r) {
            Ok(cert) if cert.orders == seq.orders && cert.witnesses.len() == seq.orders.len() => {}
            Ok(_) => failures.push(format!("{pt} -> {pf}{tag}: partial certificate")),
            Err(e) => failures.push(format!("{pt} -> {pf}{tag}: {e}")),
        }
        let post = pt.positions();
        let posf = pf.positions();
        for a in 0..m {
            for b in 0..m {
                if post[a] < post[b] && posf[b] < posf[a] {
                    match transition_ordering(&seg, ObjectId(a), ObjectId(b), &r) {
                        Some(true) => orderings += 1,
                        Some(false) => failures.push(format!("{pt} -> {pf}{tag}: ordering fails for ({a}, {b})")),
                        None => undefined += 1,
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(120) {
        failures.push(format!("took {elapsed:?}"));
    }
    let ok = failures.is_empty();
    let detail = if ok {
        format!("1000 paths, {orderings} orderings checked, {undefined} undefined, {elapsed:.1?}")
    } else {
        format!("{} failures: {}", failures.len(), failures.join("; "))
    };
    report(7, "path geometry", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn geometric_utility_bridge() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0usize;
    let mut first = None;
    for _ in 0..10_000 {
        let m = rng.gen_range(2..=5);
        let p = random_order(&mut rng, m);
        let x = random_lottery(&mut rng, m);
        let y = random_lottery(&mut rng, m);
        let r = ratio(rng.gen_range(1..=99), 100);
        let u = geometric_utility(&p, &r).unwrap();
        let lhs = expected_utility(&u, &x) - expected_utility(&u, &y);
        let delta = delta_partial_sums(&p, &x, &y, &r).unwrap();
        let rhs = pow(&r, m as i32 - 2) * delta.get(m - 1);
        if lhs != rhs {
            mismatches += 1;
            if first.is_none() {
                first = Some(format!(
                    "m = {m}, r = {}: EU difference {} vs {}",
                    to_canonical(&r),
                    to_canonical(&lhs),
                    to_canonical(&rhs)
                ));
            }
        }
    }
    let ok = mismatches == 0;
    let detail = if ok {
        "10000 random cases".to_string()
    } else {
        format!("{mismatches} of 10000 differ, first: {}", first.unwrap())
    };
    report(8, "geometric utility bridge", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn dominance_oracles() {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let m = rng.gen_range(2..=5);
        let p = random_order(&mut rng, m);
        let x = random_lottery(&mut rng, m);
        let y = random_lottery(&mut rng, m);
        if r_discounted_dominates(&p, &x, &y, &Rational::one()).unwrap() != sd_dominates(&p, &x, &y) {
            problems.push(format!("{p}: discounted at 1 differs from SD"));
        }
    }
    let mut audited = 0;
    for e in common::corpus() {
        let an = Analyzer::new(&e.mech);
        if an.check_r_psp(&Rational::one(), false).unwrap() != an.check_sd_sp(false) {
            problems.push(format!("{}: discounted at 1 differs from SD", e.name));
        }
        let (deg, _) = an.max_degree(false);
        if !deg.lower().is_positive() {
            // Nothing to audit below a zero degree.
            continue;
        }
        match an.sampled_utility_audit(deg.lower(), 1000, 20240601) {
            Ok(a) if a.passed() => audited += 1,
            Ok(a) => problems.push(format!("{}: {} audit violations", e.name, a.violation_count)),
            Err(err) => problems.push(format!("{}: {err}", e.name)),
        }
    }
    let ok = problems.is_empty();
    let detail = if ok {
        format!("10000 random pairs, {audited} mechanisms audited")
    } else {
        problems.join("; ")
    };
    report(9, "dominance oracles and sampled audit", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn case_ten_tracks_feasibility() {
    // The manipulation c>d>a>b -> c>a>d>b binds exactly at the lower
    // feasibility bound, so it never narrows the interval.
    for s in [3, 10, 100] {
        let li = local_psp_interval(&int(s)).unwrap();
        let lows: Vec<&Rational> = li
            .constraints
            .iter()
            .filter(|c| c.case == Some(Case::X))
            .filter_map(|c| match &c.bound {
                psp_core::counterexample::Bound::Lower(v) => Some(v),
                _ => None,
            })
            .collect();
        assert!(!lows.is_empty());
        assert!(lows.iter().all(|v| **v == li.feasibility.lo));
    }
}
