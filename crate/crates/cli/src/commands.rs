use std::fmt::Write as _;
use std::path::Path;

use psp_core::analysis::{AnalysisError, Analyzer, CheckOutcome};
use psp_core::assign::{
    mechanism_from_json, mechanism_to_json, tabulate_ps, tabulate_rsd, AssignError, Setting, TabulatedMechanism,
};
use psp_core::counterexample::{build_phi, find_witness, local_psp_interval, CounterexampleError, PhiParams};
use psp_core::geometry::{adaptive_target, geometric_utility, passed_sequence, urbi_passage_witness};
use psp_core::prefs::{canonical_transition, PreferenceOrder};
use psp_core::rational::{parse_user, to_canonical, Rational};
use serde_json::{json, Value};

use crate::envelope::{InputDigest, Outcome, Status};
use crate::ZooKind;

fn rational_arg(name: &str, text: &str) -> Result<Rational, Outcome> {
    parse_user(text).map_err(|e| Outcome::error(Status::InputError, format!("--{name}: {e}")))
}

fn describe(out: &CheckOutcome) -> String {
    match &out.witness {
        None => "yes".to_string(),
        Some(w) => format!("no ({w})"),
    }
}

pub fn analyze(path: &Path, audit: Option<usize>, seed: u64) -> Outcome {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => return Outcome::error(Status::InputError, format!("cannot read {}: {e}", path.display())),
    };
    let digest = InputDigest::of_bytes(path, &bytes);
    let text = match String::from_utf8(bytes) {
        Ok(t) => t,
        Err(_) => return Outcome::error(Status::InputError, format!("{} is not UTF-8", path.display())),
    };
    let mech = match mechanism_from_json(&text) {
        Ok(m) => m,
        Err(e) => {
            let mut out = Outcome::error(Status::InputError, e.to_string());
            out.inputs.push(digest);
            return out;
        }
    };
    let mut out = analyze_mechanism(&mech, audit, seed);
    out.inputs.push(digest);
    out
}

fn analyze_mechanism(mech: &TabulatedMechanism, audit: Option<usize>, seed: u64) -> Outcome {
    let an = Analyzer::new(mech);
    let sd = an.check_sd_sp(false);
    let ld = an.check_ld_sp(false);
    let sd_local = an.check_sd_sp(true);
    let ld_local = an.check_ld_sp(true);
    let mut status = Status::Ok;
    let mut text = String::new();
    let s = mech.setting();
    writeln!(
        text,
        "mechanism: n = {}, m = {}, q = {:?}, {} profiles",
        s.n(),
        s.m(),
        s.q(),
        mech.profile_count()
    )
    .unwrap();
    writeln!(text, "SD-SP: {}", describe(&sd)).unwrap();
    writeln!(text, "LD-SP: {}", describe(&ld)).unwrap();
    writeln!(text, "local SD-SP: {}", describe(&sd_local)).unwrap();
    writeln!(text, "local LD-SP: {}", describe(&ld_local)).unwrap();

    let report = match an.verify_theorem1() {
        Ok(r) => r,
        Err(AnalysisError::TheoremViolation(r)) => {
            status = Status::VerificationFailure;
            *r
        }
        Err(e) => return Outcome::error(Status::VerificationFailure, e.to_string()),
    };
    writeln!(text, "{report}").unwrap();

    let mut result = json!({
        "mechanism": { "n": s.n(), "m": s.m(), "q": s.q(), "profiles": mech.profile_count() },
        "sd_sp": sd,
        "ld_sp": ld,
        "local_sd_sp": sd_local,
        "local_ld_sp": ld_local,
        "degrees": report,
    });
    if let Some(samples) = audit {
        match an.sampled_utility_audit(report.r_global.lower(), samples, seed) {
            Ok(a) => {
                writeln!(
                    text,
                    "audit at r = {}: {} utilities, {} comparisons, {} violations, min gain {}",
                    to_canonical(&a.r),
                    a.utilities,
                    a.checks,
                    a.violation_count,
                    a.min_margin.as_ref().map(to_canonical).unwrap_or_else(|| "n/a".into())
                )
                .unwrap();
                if !a.passed() {
                    status = Status::VerificationFailure;
                }
                result["audit"] = serde_json::to_value(&a).expect("audit serializes");
            }
            Err(e) => {
                status = Status::VerificationFailure;
                writeln!(text, "audit: {e}").unwrap();
                result["audit"] = json!({ "error": e.to_string() });
            }
        }
    }
    Outcome {
        status,
        inputs: Vec::new(),
        result,
        text: text.trim_end().to_string(),
    }
}

pub fn counterexample(epsilon: &str, budget: &str) -> Outcome {
    let eps = match rational_arg("epsilon", epsilon) {
        Ok(e) => e,
        Err(o) => return o,
    };
    let budget = match rational_arg("budget", budget) {
        Ok(b) => b,
        Err(o) => return o,
    };
    match find_witness(&eps, &budget) {
        Ok(cert) => {
            let mut text = String::new();
            writeln!(text, "epsilon = {}", to_canonical(&cert.epsilon)).unwrap();
            writeln!(
                text,
                "s = {} (scanned {} values)",
                to_canonical(cert.params.s()),
                cert.scanned.len()
            )
            .unwrap();
            writeln!(
                text,
                "alpha = {} (midpoint of {})",
                to_canonical(cert.params.alpha()),
                cert.local_interval
            )
            .unwrap();
            writeln!(text, "local check at r = 1/s: {}", describe(&cert.local_check)).unwrap();
            writeln!(
                text,
                "Delta_3 for {} -> {} at r = s^-(2-epsilon): {} ({} bits, {:?})",
                cert.truthful, cert.misreport, cert.delta3.delta3, cert.delta3.bits, cert.delta3.sign
            )
            .unwrap();
            writeln!(
                text,
                "violating utility: geometric with ratio {} = ({})",
                to_canonical(&cert.utility_ratio),
                cert.utility
                    .values()
                    .iter()
                    .map(to_canonical)
                    .collect::<Vec<_>>()
                    .join(", ")
            )
            .unwrap();
            write!(text, "gain from misreporting: {}", to_canonical(&cert.gain)).unwrap();
            let status = if cert.local_check.holds && cert.gain > Rational::from_integer(0.into()) {
                Status::Ok
            } else {
                Status::VerificationFailure
            };
            Outcome {
                status,
                inputs: Vec::new(),
                result: serde_json::to_value(&cert).expect("certificate serializes"),
                text,
            }
        }
        Err(e @ CounterexampleError::Budget { .. }) => Outcome::error(Status::BudgetError, e.to_string()),
        Err(e @ (CounterexampleError::EpsilonRange(_) | CounterexampleError::BaseRange(_))) => {
            Outcome::error(Status::InputError, e.to_string())
        }
        Err(e) => Outcome::error(Status::VerificationFailure, e.to_string()),
    }
}

pub fn transition(truthful: &str, misreport: &str, r: &str, urbi_sq: bool) -> Outcome {
    let parse = |flag: &str, t: &str| {
        PreferenceOrder::parse_default(t).map_err(|e| Outcome::error(Status::InputError, format!("--{flag}: {e}")))
    };
    let (pt, pf) = match (parse("true", truthful), parse("false", misreport)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(o), _) | (_, Err(o)) => return o,
    };
    if pt.m() != pf.m() {
        return Outcome::error(
            Status::InputError,
            format!("orders over {} and {} objects", pt.m(), pf.m()),
        );
    }
    let r = match rational_arg("r", r) {
        Ok(r) => r,
        Err(o) => return o,
    };
    let start_ratio = if urbi_sq { &r * &r } else { r.clone() };
    let u = match geometric_utility(&pt, &start_ratio) {
        Ok(u) => u,
        Err(e) => return Outcome::error(Status::InputError, format!("--r: {e}")),
    };
    let (c, seg) = match adaptive_target(&u, &pt, &pf, &r) {
        Ok(x) => x,
        Err(e) => return Outcome::error(Status::VerificationFailure, e.to_string()),
    };
    let seq = match passed_sequence(&seg) {
        Ok(s) => s,
        Err(e) => return Outcome::error(Status::VerificationFailure, e.to_string()),
    };
    let canonical = canonical_transition(&pt, &pf).expect("same universe");
    let matches = seq.orders == canonical;
    let certificate = urbi_passage_witness(&seg, &r);

    let mut text = String::new();
    writeln!(text, "start u = geometric({}) for {pt}", to_canonical(&start_ratio)).unwrap();
    writeln!(text, "target v = C^(m - rank) for {pf}, C = {}", to_canonical(&c)).unwrap();
    writeln!(text, "passed sequence ({} orders):", seq.orders.len()).unwrap();
    writeln!(text, "  {}", seq.orders[0]).unwrap();
    for (o, t) in seq.orders[1..].iter().zip(&seq.times) {
        writeln!(text, "  {o}  from alpha = {}", to_canonical(t)).unwrap();
    }
    writeln!(
        text,
        "matches canonical transition: {}",
        if matches { "yes" } else { "NO" }
    )
    .unwrap();
    match &certificate {
        Ok(cert) => {
            writeln!(text, "passage certificate at r = {}:", to_canonical(&r)).unwrap();
            write!(text, "{cert}").unwrap();
        }
        Err(e) => {
            writeln!(text, "no passage certificate at r = {}: {e}", to_canonical(&r)).unwrap();
        }
    }
    let status = if !matches || (urbi_sq && certificate.is_err()) {
        Status::VerificationFailure
    } else {
        Status::Ok
    };
    let result = json!({
        "truthful": pt.to_string(),
        "misreport": pf.to_string(),
        "r": to_canonical(&r),
        "start_ratio": to_canonical(&start_ratio),
        "base": to_canonical(&c),
        "sequence": seq.orders.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
        "times": seq.times.iter().map(to_canonical).collect::<Vec<_>>(),
        "canonical": canonical.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
        "matches_canonical": matches,
        "certificate": match &certificate {
            Ok(c) => serde_json::to_value(c).expect("certificate serializes"),
            Err(e) => json!({ "error": e.to_string() }),
        },
    });
    Outcome {
        status,
        inputs: Vec::new(),
        result,
        text: text.trim_end().to_string(),
    }
}

fn capacities(n: usize, m: usize, q: Option<&str>) -> Result<Setting, Outcome> {
    let setting = match q {
        None => Setting::balanced(n, m),
        Some(text) => {
            let caps: Result<Vec<u32>, _> = text.split(',').map(|c| c.trim().parse::<u32>()).collect();
            match caps {
                Ok(caps) => Setting::new(n, m, caps),
                Err(e) => return Err(Outcome::error(Status::InputError, format!("--q: {e}"))),
            }
        }
    };
    setting.map_err(|e| Outcome::error(Status::InputError, e.to_string()))
}

fn phi_from_args(s: Option<&str>, alpha: Option<&str>) -> Result<TabulatedMechanism, Outcome> {
    let s = rational_arg("s", s.unwrap_or("10"))?;
    let alpha = match alpha.unwrap_or("mid") {
        "mid" => {
            let li = local_psp_interval(&s).map_err(|e| Outcome::error(Status::InputError, e.to_string()))?;
            if li.interval.is_empty() {
                return Err(Outcome::error(
                    Status::InputError,
                    format!("local interval is empty for s = {}", to_canonical(&s)),
                ));
            }
            li.interval.midpoint()
        }
        text => rational_arg("alpha", text)?,
    };
    let params = PhiParams::new(s, alpha).map_err(|e| Outcome::error(Status::InputError, e.to_string()))?;
    build_phi(&params).map_err(|e| Outcome::error(Status::InputError, e.to_string()))
}

pub fn zoo(
    kind: ZooKind,
    n: usize,
    m: usize,
    q: Option<&str>,
    s: Option<&str>,
    alpha: Option<&str>,
    out: &Path,
) -> Outcome {
    let built: Result<TabulatedMechanism, Outcome> = match kind {
        ZooKind::Phi => phi_from_args(s, alpha),
        ZooKind::Rsd | ZooKind::Ps => capacities(n, m, q).and_then(|setting| {
            let r: Result<TabulatedMechanism, AssignError> = if kind == ZooKind::Rsd {
                tabulate_rsd(&setting)
            } else {
                tabulate_ps(&setting)
            };
            r.map_err(|e| Outcome::error(Status::InputError, e.to_string()))
        }),
    };
    let mech = match built {
        Ok(m) => m,
        Err(o) => return o,
    };
    let json = mechanism_to_json(&mech);
    if let Err(e) = std::fs::write(out, &json) {
        return Outcome::error(Status::InputError, format!("cannot write {}: {e}", out.display()));
    }
    let digest = InputDigest::of_bytes(out, json.as_bytes());
    let result: Value = json!({
        "path": digest.path,
        "sha256": digest.sha256,
        "n": mech.n(),
        "m": mech.m(),
        "profiles": mech.profile_count(),
        "distinct_rows": mech.distinct_rows().len(),
    });
    Outcome {
        status: Status::Ok,
        inputs: Vec::new(),
        text: format!(
            "wrote {} ({} profiles, {} distinct rows, sha256 {})",
            out.display(),
            mech.profile_count(),
            mech.distinct_rows().len(),
            digest.sha256
        ),
        result,
    }
}
