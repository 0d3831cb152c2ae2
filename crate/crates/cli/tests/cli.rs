use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("../core/fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn mvnabs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvnabs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_holds_exit_zero() {
    let o = mvnabs(&["check", &fixture("apl2.mvn"), &fixture("pl2.mvn"), &fixture("cro.map")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("holds"));
}

#[test]
fn failing_candidate_exit_one_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let o = mvnabs(&[
        "candidates",
        &fixture("mtrp.mvn"),
        &fixture("trp.map"),
        "--out-dir",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
    let cand = dir.path().join("MTRP_cand3.mvn").to_string_lossy().into_owned();
    let o = mvnabs(&["check", &cand, &fixture("mtrp.mvn"), &fixture("trp.map"), "--witness"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.starts_with("refuted"));
    assert!(text.contains("invalid"), "{text}");
    let first = dir.path().join("MTRP_cand0.mvn").to_string_lossy().into_owned();
    let o = mvnabs(&["check", &first, &fixture("mtrp.mvn"), &fixture("trp.map")]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn infinite_traces_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("branch.mvn");
    std::fs::write(
        &path,
        "mvn Branch\nentity x : 0..1\nentity y : 0..1\nneighbourhood x = [x, y]\nneighbourhood y = [x, y]\n\
         table x:\n  0 0 -> 0\n  0 1 -> 1\n  1 0 -> 1\n  1 1 -> 1\n\
         table y:\n  0 0 -> 1\n  0 1 -> 0\n  1 0 -> 0\n  1 1 -> 1\n",
    )
    .unwrap();
    let o = mvnabs(&["traces", &path.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("infinite trace set"), "{}", stderr(&o));
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.mvn");
    std::fs::write(&path, "mvn Bad\nentity X : 0..0\n").unwrap();
    let o = mvnabs(&["validate", &path.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2, column 15"));
    let o = mvnabs(&["validate", "/nonexistent/model.mvn"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mvnabs(&["check", &fixture("apl2.mvn")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_check_contract() {
    let o = mvnabs(&[
        "oracle-check",
        &fixture("apl2.mvn"),
        &fixture("pl2.mvn"),
        &fixture("cro.map"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = mvnabs(&[
        "oracle-check",
        &fixture("atrp.mvn"),
        &fixture("mtrp.mvn"),
        &fixture("trp.map"),
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn json_is_stable() {
    let args = [
        "check",
        &fixture("apl2.mvn"),
        &fixture("pl2.mvn"),
        &fixture("cro.map"),
        "--json",
    ];
    let a = stdout(&mvnabs(&args));
    let b = stdout(&mvnabs(&args));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["holds"], serde_json::Value::Bool(true));
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        [
            "family",
            "holds",
            "options",
            "removals",
            "stats",
            "surviving_counts",
            "witness"
        ]
    );

    let o = mvnabs(&["attractors", &fixture("pl2.mvn"), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["attractors"].as_array().unwrap().len(), 2);

    let o = mvnabs(&["traces", &fixture("pl2.mvn"), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["traces"][0]["loop"].is_array());
}

#[test]
fn dot_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pl2.dot");
    let o = mvnabs(&[
        "graph",
        &fixture("pl2.mvn"),
        "--semantics",
        "async",
        "--dot",
        &out.to_string_lossy(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.matches("->").count(), 8);
}

#[test]
fn labels_flag() {
    let o = mvnabs(&["attractors", &fixture("pl2.mvn"), "--labels"]);
    assert!(stdout(&o).contains("point: {CI=1 Cro=0}"), "{}", stdout(&o));
}

#[test]
fn abstract_states() {
    let o = mvnabs(&["abstract", &fixture("pl2.mvn"), &fixture("cro.map"), "--states"]);
    assert!(stdout(&o).contains("12 -> 11"));
    let o = mvnabs(&["abstract", &fixture("pl2.mvn"), &fixture("cro.map"), "--traces"]);
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn fuzz_exit_zero() {
    let o = mvnabs(&["fuzz", "--seed", "3", "--count", "40"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("divergences: 0"));
}
