//! Corpus runner: term files plus a `manifest.json` of expected results.
//!
//! ```json
//! { "schema": 1,
//!   "files": { "maM.term": { "stated": ["step-count"], "step-count": 3, ... } } }
//! ```
//!
//! Every field except `stated` is optional; only the fields present are
//! checked. `stated` lists the fields whose values were fixed by hand
//! rather than taken from a previous run; `--regen` rewrites everything
//! else and refuses to change a stated value.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use syncpat::analysis::{degree_of_distributability, Degree};
use syncpat::patterns::Analysis;
use syncpat::reachability::{must_reach_success_finite, reach_success, Verdict};
use syncpat::{Calculus, Term};

use crate::{emit_json, read_term, CliError};

pub const MANIFEST: &str = "manifest.json";
pub const EXTENSION: &str = "term";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stated: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_count: Option<usize>,
    /// `"i-j"` → pair kind.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_witnesses: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_nonlocal: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_asymmetric: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub great_m_witnesses: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub great_m_nonlocal: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub great_m_asymmetric: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reach: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub must_reach: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<Degree>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema: u32,
    pub files: BTreeMap<String, Expect>,
}

/// Everything the manifest can declare, computed for one term.
pub fn observe(t: &Term, state_limit: usize) -> Expect {
    let an = Analysis::new(t);
    let pairs = an.matrix.pairs().map(|r| (format!("{}-{}", r.first, r.second), r.kind.name().to_string()));
    Expect {
        stated: Vec::new(),
        step_count: Some(an.steps.steps.len()),
        pairs: Some(pairs.collect()),
        m_witnesses: Some(an.find_m(false, false).len()),
        m_nonlocal: Some(an.find_m(false, true).len()),
        m_asymmetric: Some(an.find_m(true, false).len()),
        great_m_witnesses: Some(an.find_great_m(false, false).len()),
        great_m_nonlocal: Some(an.find_great_m(false, true).len()),
        great_m_asymmetric: Some(an.find_great_m(true, false).len()),
        reach: Some(reach_success(t, state_limit)),
        must_reach: Some(must_reach_success_finite(t, state_limit)),
        degree: Some(degree_of_distributability(t)),
    }
}

#[derive(Debug, Serialize)]
pub struct Mismatch {
    pub field: String,
    pub expected: Value,
    pub found: Value,
}

fn fields(e: &Expect) -> serde_json::Map<String, Value> {
    match serde_json::to_value(e).expect("serialisable") {
        Value::Object(mut m) => {
            m.remove("stated");
            m
        }
        _ => unreachable!(),
    }
}

/// Declared fields of `want` that differ from `got`.
pub fn compare(want: &Expect, got: &Expect) -> Vec<Mismatch> {
    let got = fields(got);
    fields(want)
        .into_iter()
        .filter_map(|(field, expected)| {
            let found = got.get(&field).cloned().unwrap_or(Value::Null);
            (found != expected).then_some(Mismatch { field, expected, found })
        })
        .collect()
}

/// `*.term` files in `dir`, sorted by name.
pub fn term_files(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let io = |source| CliError::Io { path: dir.display().to_string(), source };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(EXTENSION) {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.push((name, path));
        }
    }
    out.sort();
    Ok(out)
}

/// The join-calculus terms of a corpus directory.
pub fn join_terms(dir: &Path) -> Result<Vec<Term>, CliError> {
    let mut out = Vec::new();
    for (_, path) in term_files(dir)? {
        let t = read_term(&path)?;
        if t.calculus == Calculus::Join {
            out.push(t);
        }
    }
    Ok(out)
}

fn load_manifest(dir: &Path) -> Result<Option<Manifest>, CliError> {
    let path = dir.join(MANIFEST);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(source) => return Err(CliError::Io { path: path.display().to_string(), source }),
    };
    let m: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if m.schema != 1 {
        return Err(CliError::Input(format!("{}: unsupported schema {}", path.display(), m.schema)));
    }
    Ok(Some(m))
}

#[derive(Serialize)]
struct FileResult {
    file: String,
    pass: bool,
    mismatches: Vec<Mismatch>,
}

pub fn run(dir: &Path, regen: bool, json: bool, state_limit: usize) -> Result<bool, CliError> {
    let files = term_files(dir)?;
    let manifest = load_manifest(dir)?;
    if files.is_empty() && manifest.as_ref().is_none_or(|m| m.files.is_empty()) {
        eprintln!("warning: no term files in {}; nothing to check", dir.display());
        if json {
            println!("{}", emit_json(&json!({ "files": [], "passed": 0, "failed": 0 })));
        }
        return Ok(true);
    }
    let old = match manifest {
        Some(m) => m.files,
        None if regen => BTreeMap::new(),
        None => return Err(CliError::Input(format!("{}: missing {MANIFEST}", dir.display()))),
    };
    if !regen {
        let names: Vec<&String> = files.iter().map(|(n, _)| n).collect();
        if let Some(n) = old.keys().find(|k| !names.contains(k)) {
            return Err(CliError::Input(format!("{MANIFEST} lists `{n}`, which is not in {}", dir.display())));
        }
        if let Some(n) = names.iter().find(|n| !old.contains_key(**n)) {
            return Err(CliError::Input(format!("`{n}` has no entry in {MANIFEST}")));
        }
    }

    let terms = files.iter().map(|(n, p)| read_term(p).map(|t| (n.clone(), t))).collect::<Result<Vec<_>, _>>()?;
    // corpus files are independent; results come back in file order
    let observed: Vec<(String, Expect)> = terms.par_iter().map(|(n, t)| (n.clone(), observe(t, state_limit))).collect();

    if regen {
        return regenerate(dir, &old, observed);
    }

    let results: Vec<FileResult> = observed
        .iter()
        .map(|(n, got)| {
            let mismatches = compare(&old[n], got);
            FileResult { file: n.clone(), pass: mismatches.is_empty(), mismatches }
        })
        .collect();
    let failed = results.iter().filter(|r| !r.pass).count();
    let passed = results.len() - failed;
    if json {
        println!("{}", emit_json(&json!({ "files": results, "passed": passed, "failed": failed })));
    } else {
        for r in &results {
            println!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.file);
            for m in &r.mismatches {
                println!("  {}: expected {}, found {}", m.field, m.expected, m.found);
            }
        }
        println!("{passed} passed, {failed} failed");
    }
    Ok(failed == 0)
}

fn regenerate(dir: &Path, old: &BTreeMap<String, Expect>, observed: Vec<(String, Expect)>) -> Result<bool, CliError> {
    let mut files = BTreeMap::new();
    let mut conflicts = 0;
    for (name, mut got) in observed {
        if let Some(prev) = old.get(&name) {
            let prev_fields = fields(prev);
            let stated = Expect { stated: Vec::new(), ..prev.clone() };
            for m in compare(&stated, &got) {
                if prev.stated.contains(&m.field) {
                    conflicts += 1;
                    eprintln!("{name}: stated {} is {}, but found {}", m.field, m.expected, m.found);
                }
            }
            got.stated = prev.stated.iter().filter(|f| prev_fields.contains_key(*f)).cloned().collect();
        }
        files.insert(name, got);
    }
    if conflicts > 0 {
        eprintln!("{MANIFEST} not written");
        return Ok(false);
    }
    let n = files.len();
    let text = emit_json(&Manifest { schema: 1, files }) + "\n";
    let path = dir.join(MANIFEST);
    std::fs::write(&path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    println!("wrote {} ({n} files)", path.display());
    Ok(true)
}
