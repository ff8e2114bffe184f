use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn syncpat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syncpat"))
        .args(args)
        .env_remove("SYNCPAT_STATE_LIMIT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

fn term_file(dir: &Path, name: &str, calculus: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, format!("%calculus {calculus}\n{body}\n")).unwrap();
    p
}

fn corpus_file(name: &str) -> String {
    corpus().join(name).display().to_string()
}

#[test]
fn shipped_corpus_passes() {
    let o = syncpat(&["corpus", corpus().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains(" 0 failed"));
}

#[test]
fn perturbed_expectation_fails_with_diff() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["maM.term", "manifest.json"] {
        std::fs::copy(corpus().join(f), dir.path().join(f)).unwrap();
    }
    let manifest = dir.path().join("manifest.json");
    let mut m: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    let files = m["files"].as_object_mut().unwrap();
    files.retain(|k, _| k == "maM.term");
    files["maM.term"]["step-count"] = 4.into();
    std::fs::write(&manifest, serde_json::to_string(&m).unwrap()).unwrap();

    let o = syncpat(&["corpus", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAIL maM.term"), "{out}");
    assert!(out.contains("step-count: expected 4, found 3"), "{out}");

    // a stated value is never overwritten by --regen
    let o = syncpat(&["corpus", "--regen", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stated step-count"));
}

#[test]
fn empty_dir_is_a_vacuous_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = syncpat(&["corpus", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn manifest_problems_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    term_file(dir.path(), "a.term", "ma", "n[]");
    let o = syncpat(&["corpus", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "missing manifest");

    std::fs::write(dir.path().join("manifest.json"), r#"{"schema": 1, "files": {"b.term": {}}}"#).unwrap();
    let o = syncpat(&["corpus", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "manifest names a missing file");

    let o = syncpat(&["corpus", "--regen", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let o = syncpat(&["corpus", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn steps_output() {
    let o = syncpat(&["steps", &corpus_file("maMS.term")]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("0 MA_IN"));
    assert!(lines[1].starts_with("1 MA_OPEN"));
    assert!(lines[2].starts_with("2 MA_OPEN"));

    let dir = tempfile::tempdir().unwrap();
    let nil = term_file(dir.path(), "nil.term", "ma", "0");
    let o = syncpat(&["steps", nil.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "no steps");
}

#[test]
fn malformed_file_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = term_file(dir.path(), "bad.term", "ma", "n1[in");
    let o = syncpat(&["steps", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.term:2:"), "{err}");
}

#[test]
fn unknown_flag_is_rejected() {
    let o = syncpat(&["patterns", "--frobnicate", &corpus_file("maM.term")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn patterns_m_and_star() {
    let v = json(&syncpat(&["--json", "patterns", "--m", &corpus_file("maM.term")]));
    assert_eq!(v["schema"], 1);
    let ws = v["witnesses"].as_array().unwrap();
    assert_eq!(ws.len(), 1);
    assert_eq!(ws[0]["locality"], "NON_LOCAL");
    assert_eq!(ws[0]["b_uses_open"], true);

    let cycle = corpus_file("ma_cycle.term");
    let v = json(&syncpat(&["--json", "patterns", "--great-m", &cycle]));
    assert_eq!(v["witnesses"].as_array().unwrap().len(), 0);
    let v = json(&syncpat(&["--json", "patterns", "--great-m", "--allow-asymmetric", &cycle]));
    assert_eq!(v["witnesses"].as_array().unwrap().len(), 1);

    let v = json(&syncpat(&["--json", "patterns", "--great-m", &corpus_file("pimix_star_00000.term")]));
    let ws = v["witnesses"].as_array().unwrap();
    assert_eq!(ws.len(), 1);
    assert_eq!(ws[0]["locality"], "NON_LOCAL");
}

#[test]
fn dot_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.dot");
    let o = syncpat(&["patterns", "--m", "--dot", out.to_str().unwrap(), &corpus_file("maM.term")]);
    assert!(o.status.success());
    let dot = std::fs::read_to_string(out).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("color=red"));
}

#[test]
fn json_is_byte_identical_across_runs() {
    for args in [
        vec!["--json", "steps", "maMS.term"],
        vec!["--json", "pairs", "ma_cycle.term"],
        vec!["--json", "patterns", "--great-m", "pimix_star_10101.term"],
        vec!["--json", "decompose", "join_decompose.term"],
        vec!["--json", "corpus", ""],
    ] {
        let args: Vec<String> = args
            .iter()
            .map(|a| if a.ends_with(".term") || a.is_empty() { corpus_file(a) } else { a.to_string() })
            .collect();
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = syncpat(&refs);
        let b = syncpat(&refs);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(json(&a)["schema"], 1);
    }
}

#[test]
fn success_verdicts_and_state_limit() {
    let ms = corpus_file("maMS.term");
    assert_eq!(stdout(&syncpat(&["success", "--reach", &ms])).trim(), "TRUE");
    assert_eq!(stdout(&syncpat(&["success", "--must", &ms])).trim(), "FALSE");
    assert_eq!(stdout(&syncpat(&["success", "--has", &ms])).trim(), "FALSE");
    let o = Command::new(env!("CARGO_BIN_EXE_syncpat"))
        .args(["success", "--reach", &ms])
        .env("SYNCPAT_STATE_LIMIT", "1")
        .output()
        .unwrap();
    assert_eq!(stdout(&o).trim(), "BOUND_EXCEEDED");
    assert_eq!(syncpat(&["success", &ms]).status.code(), Some(2), "a mode is required");
}

#[test]
fn decompose_join_example() {
    let v = json(&syncpat(&["--json", "decompose", &corpus_file("join_decompose.term")]));
    assert_eq!(v["components"].as_array().unwrap().len(), 4);
    assert_eq!(v["degree"], 4);
}

#[test]
fn parse_echoes_canonical_form() {
    let o = syncpat(&["parse", &corpus_file("maM.term")]);
    assert_eq!(stdout(&o).trim(), "open n1 | n1[in n2] | n1[] | n2[]");
}

#[test]
fn oracle_small_bounds() {
    let v = json(&syncpat(&["--json", "oracle", "lemma3", "--max-operators", "7", "--jobs", "1"]));
    assert_eq!(v["pass"], true);
    assert!(v["report"]["witnesses_found"].as_u64().unwrap() > 0);
    assert_eq!(v["report"]["banner"], "bounded check: evidence, not proof");

    let o = syncpat(&["oracle", "corollary5", "--max-operators", "6"]);
    assert!(o.status.success());

    let o = syncpat(&["oracle", "lemma3", "--calculus", "pi-mix", "--max-operators", "3"]);
    assert_eq!(o.status.code(), Some(2), "the lemma is about ambients");

    let v = json(&syncpat(&["--json", "oracle", "join-locality", "--corpus", corpus().to_str().unwrap()]));
    assert_eq!(v["pass"], true);
    assert!(v["report"]["witnesses_found"].as_u64().unwrap() > 0);
}
