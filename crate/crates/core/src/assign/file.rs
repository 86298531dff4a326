//! JSON mechanism files.
//!
//! ```json
//! {"setting": {"n": 1, "m": 2, "q": [1, 1]},
//!  "objects": ["a", "b"],
//!  "table": [{"profile": ["a>b"], "assignment": [["1", "0"]]}, ...]}
//! ```
//!
//! Rationals are strings in lowest terms. Every profile must appear exactly
//! once. [`mechanism_to_json`] writes one table entry per line in profile
//! order, so saving a loaded canonical file reproduces it byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AssignError, AssignmentMatrix, AssignmentVector, Setting, TableBuilder, TabulatedMechanism};
use crate::prefs::{PreferenceOrder, PreferenceProfile};
use crate::rational::{parse_canonical, to_canonical};

#[derive(Serialize, Deserialize)]
struct SettingJson {
    n: usize,
    m: usize,
    q: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    profile: Vec<String>,
    assignment: Vec<Vec<serde_json::Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileJson {
    setting: SettingJson,
    objects: Vec<String>,
    table: Vec<EntryJson>,
}

fn entry_value(v: &serde_json::Value) -> Result<String, String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string()),
        other => Err(format!("entry {other} is not a rational string")),
    }
}

/// Parses and validates a mechanism file's text.
pub fn mechanism_from_json(text: &str) -> Result<TabulatedMechanism, AssignError> {
    let file: FileJson = serde_json::from_str(text).map_err(|e| AssignError::Format(e.to_string()))?;
    let setting = Setting::new(file.setting.n, file.setting.m, file.setting.q)?;
    let names = file.objects;
    let mut distinct = names.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != names.len() || names.iter().any(|n| n.is_empty() || n.contains('>')) {
        return Err(AssignError::Format(format!("invalid object names {names:?}")));
    }
    let mut builder = TableBuilder::new(setting.clone(), names.clone())?;
    let mut slots: Vec<Option<AssignmentMatrix>> = vec![None; builder.profile_count];
    let base = builder.orders.len();

    for entry in file.table {
        let label = format!("[{}]", entry.profile.join(", "));
        let bad = |reason: String| AssignError::BadEntry {
            profile: label.clone(),
            reason,
        };
        if entry.profile.len() != setting.n() {
            return Err(bad(format!("expected {} orders", setting.n())));
        }
        let orders = entry
            .profile
            .iter()
            .map(|o| PreferenceOrder::parse(o, &names))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(e.to_string()))?;
        let profile = PreferenceProfile::new(orders)?;
        let idx = profile.orders().iter().fold(0, |acc, o| acc * base + o.lex_index());
        if slots[idx].is_some() {
            return Err(AssignError::DuplicateProfile { profile: label });
        }
        if entry.assignment.len() != setting.n() {
            return Err(bad(format!("expected {} assignment rows", setting.n())));
        }
        let mut rows = Vec::with_capacity(setting.n());
        for raw in &entry.assignment {
            if raw.len() != setting.m() {
                return Err(bad(format!("expected {} entries per row", setting.m())));
            }
            let probs = raw
                .iter()
                .map(|v| {
                    let text = entry_value(v)?;
                    parse_canonical(&text).map_err(|e| e.to_string())
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(bad)?;
            rows.push(AssignmentVector::new_unchecked(probs));
        }
        slots[idx] = Some(AssignmentMatrix::new(rows));
    }

    for (idx, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(matrix) => builder.push(idx, matrix)?,
            None => {
                return Err(AssignError::IncompleteTable {
                    profile: builder.label(idx),
                })
            }
        }
    }
    Ok(builder.finish())
}

/// Canonical text of a mechanism file.
pub fn mechanism_to_json(mech: &TabulatedMechanism) -> String {
    let s = mech.setting();
    let setting = SettingJson {
        n: s.n(),
        m: s.m(),
        q: s.q().to_vec(),
    };
    let mut out = String::new();
    out.push_str("{\n  \"setting\": ");
    out.push_str(&serde_json::to_string(&setting).expect("plain data"));
    out.push_str(",\n  \"objects\": ");
    out.push_str(&serde_json::to_string(mech.names()).expect("plain data"));
    out.push_str(",\n  \"table\": [\n");
    let count = mech.profile_count();
    for idx in 0..count {
        let profile = mech.profile_at(idx);
        let entry = EntryJson {
            profile: profile.display_with(mech.names()),
            assignment: (0..s.n())
                .map(|i| {
                    mech.row_by_id(mech.row_id(idx, i))
                        .probs()
                        .iter()
                        .map(|p| serde_json::Value::String(to_canonical(p)))
                        .collect()
                })
                .collect(),
        };
        out.push_str("    ");
        out.push_str(&serde_json::to_string(&entry).expect("plain data"));
        out.push_str(if idx + 1 < count { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn load_mechanism(path: impl AsRef<Path>) -> Result<TabulatedMechanism, AssignError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| AssignError::Io {
        path: path.display().to_string(),
        source,
    })?;
    mechanism_from_json(&text)
}

pub fn save_mechanism(mech: &TabulatedMechanism, path: impl AsRef<Path>) -> Result<(), AssignError> {
    let path = path.as_ref();
    fs::write(path, mechanism_to_json(mech)).map_err(|source| AssignError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::{tabulate_ps, tabulate_rsd};
    use crate::rational::ratio;

    fn small() -> TabulatedMechanism {
        tabulate_ps(&Setting::new(2, 2, vec![1, 1]).unwrap()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        for mech in [
            small(),
            tabulate_rsd(&Setting::new(2, 3, vec![1, 1, 1]).unwrap()).unwrap(),
        ] {
            let text = mechanism_to_json(&mech);
            let back = mechanism_from_json(&text).unwrap();
            assert_eq!(back, mech);
            assert_eq!(mechanism_to_json(&back), text);
        }
    }

    #[test]
    fn thirds_stay_exact() {
        let text = r#"{"setting":{"n":1,"m":3,"q":[1,1,1]},"objects":["a","b","c"],"table":[
            {"profile":["a>b>c"],"assignment":[["1/3","1/3","1/3"]]},
            {"profile":["a>c>b"],"assignment":[["1/3","1/3","1/3"]]},
            {"profile":["b>a>c"],"assignment":[["1/3","1/3","1/3"]]},
            {"profile":["b>c>a"],"assignment":[["1/3","1/3","1/3"]]},
            {"profile":["c>a>b"],"assignment":[["1/3","1/3","1/3"]]},
            {"profile":["c>b>a"],"assignment":[[0,"1/2","1/2"]]}]}"#;
        let mech = mechanism_from_json(text).unwrap();
        assert_eq!(mech.row_by_id(0).probs()[0], ratio(1, 3));
        assert_eq!(mech.distinct_rows().len(), 2);
    }

    #[test]
    fn missing_profile_is_reported() {
        let text = mechanism_to_json(&small());
        let lines: Vec<&str> = text.lines().collect();
        // Drop the last table entry and fix the trailing comma.
        let mut kept: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
        let last_entry = kept.len() - 3;
        kept.remove(last_entry);
        let prev = kept.len() - 3;
        kept[prev] = kept[prev].trim_end_matches(',').to_string();
        let err = mechanism_from_json(&kept.join("\n")).unwrap_err();
        match err {
            AssignError::IncompleteTable { profile } => assert_eq!(profile, "[b>a, b>a]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rational_names_profile() {
        let text = mechanism_to_json(&small()).replacen("\"1/2\"", "\"2/4\"", 1);
        match mechanism_from_json(&text).unwrap_err() {
            AssignError::BadEntry { profile, reason } => {
                assert_eq!(profile, "[a>b, a>b]");
                assert!(reason.contains("lowest terms"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = mechanism_to_json(&small()).replacen("\"1/2\"", "\"0.5\"", 1);
        assert!(matches!(mechanism_from_json(&text), Err(AssignError::BadEntry { .. })));
    }

    #[test]
    fn infeasible_matrix_rejected() {
        let text = mechanism_to_json(&small()).replacen("[\"1/2\",\"1/2\"]", "[\"1/2\",\"1/3\"]", 1);
        assert!(matches!(
            mechanism_from_json(&text),
            Err(AssignError::Infeasible { .. })
        ));
    }

    #[test]
    fn duplicate_profile_rejected() {
        let text = mechanism_to_json(&small()).replacen("[\"b>a\",\"b>a\"]", "[\"a>b\",\"a>b\"]", 1);
        assert!(matches!(
            mechanism_from_json(&text),
            Err(AssignError::DuplicateProfile { .. })
        ));
    }
}
