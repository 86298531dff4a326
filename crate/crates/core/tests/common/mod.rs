#![allow(dead_code)]

use std::sync::OnceLock;

use psp_core::assign::{tabulate_ps, tabulate_rsd, Setting, TabulatedMechanism};
use psp_core::counterexample::{build_phi, local_psp_interval, PhiParams};
use psp_core::rational::Rational;

pub struct Entry {
    pub name: String,
    pub mech: TabulatedMechanism,
}

/// RSD for `n, m ≤ 3`, PS for `n, m ≤ 4` (capacities `ceil(n/m)`), and the
/// four-object family at `s ∈ {5, 10, 20}` with `α` the midpoint of its
/// local interval.
pub fn corpus() -> &'static [Entry] {
    static CORPUS: OnceLock<Vec<Entry>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let mut out = Vec::new();
        for n in 1..=3 {
            for m in 1..=3 {
                let s = Setting::balanced(n, m).unwrap();
                out.push(Entry {
                    name: format!("rsd {n}x{m}"),
                    mech: tabulate_rsd(&s).unwrap(),
                });
            }
        }
        for n in 1..=4 {
            for m in 1..=4 {
                let s = Setting::balanced(n, m).unwrap();
                out.push(Entry {
                    name: format!("ps {n}x{m}"),
                    mech: tabulate_ps(&s).unwrap(),
                });
            }
        }
        for s in [5, 10, 20] {
            let s = Rational::from_integer(s.into());
            let alpha = local_psp_interval(&s).unwrap().interval.midpoint();
            let p = PhiParams::new(s.clone(), alpha).unwrap();
            out.push(Entry {
                name: format!("phi s={s}"),
                mech: build_phi(&p).unwrap(),
            });
        }
        out
    })
}
