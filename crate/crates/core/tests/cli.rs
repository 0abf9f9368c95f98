use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

fn icode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icode")).args(args).output().expect("icode runs")
}

fn run(args: &[&str]) -> (i32, String) {
    let out = icode(args);
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn analyze_exit_codes() {
    let tri = fixture("p_tri");
    let pair = fixture("p_pair");
    let double = fixture("p_2stic");
    let stic = fixture("p_stic");
    let (code, out) = run(&["analyze", pair.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["verdict"]["verdict"], "RateHalfFeasible");
    assert_eq!(run(&["analyze", tri.to_str().unwrap()]).0, 3);
    let (code, out) = run(&["analyze", double.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(json(&out)["verdict"]["reason"]["subset"], serde_json::json!([2, 4, 5]));
    assert_eq!(run(&["analyze", stic.to_str().unwrap(), "--construct"]).0, 3);
    assert_eq!(run(&["analyze", tri.to_str().unwrap(), "--construct"]).0, 0);
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 2, "receivers": [{"demands": [3]}]}"#).unwrap();
    assert_eq!(run(&["analyze", bad.to_str().unwrap()]).0, 1);
    assert_eq!(run(&["analyze", dir.path().join("missing.json").to_str().unwrap()]).0, 1);
    assert_eq!(run(&["analyze"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    let stic = fixture("p_stic");
    assert_eq!(run(&["oracle", stic.to_str().unwrap(), "--q", "4"]).0, 1);
    assert_eq!(run(&["contract", stic.to_str().unwrap(), "--edge", "1,6"]).0, 1);
}

#[test]
fn construct_exit_codes() {
    let tri = fixture("p_tri");
    let (code, out) = run(&["construct", tri.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["verified"], true);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["L"], 3);
    assert_eq!(run(&["construct", fixture("p_2stic").to_str().unwrap()]).0, 3);
    assert_eq!(run(&["construct", fixture("construct_six_sets").to_str().unwrap(), "--retries", "0"]).0, 4);
}

#[test]
fn oracle_classifies_the_inner_triple() {
    let (code, out) = run(&["oracle", fixture("p_stic").to_str().unwrap(), "--subsets", "2,3,5;1,2,3"]);
    assert_eq!(code, 0);
    let dims = &json(&out)["achievable_dims"];
    assert_eq!(dims[0]["subset"], serde_json::json!([2, 3, 5]));
    assert_eq!(dims[0]["dims"], serde_json::json!([1, 3]));
    assert_eq!(dims[1]["dims"], serde_json::json!([2]));
    assert_eq!(run(&["oracle", fixture("p_2stic").to_str().unwrap()]).0, 2);
    assert_eq!(run(&["oracle", fixture("p_2stic").to_str().unwrap(), "--budget", "10"]).0, 3);
}

#[test]
fn contract_and_dot() {
    let (code, out) = run(&["contract", fixture("p_stic").to_str().unwrap(), "--edge", "2,3"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["instance"]["n"], 8);
    assert_eq!(v["map"]["history"], serde_json::json!([[2, 3]]));
    let (code, dot) = run(&["export-dot", fixture("p_spic").to_str().unwrap()]);
    assert_eq!(code, 0);
    let nodes = dot.lines().filter(|l| l.trim_start().starts_with('m') && l.contains("[label=")).count();
    let stars = dot.lines().filter(|l| l.trim_start().starts_with('h') && l.contains("[shape=point")).count();
    assert_eq!((nodes, stars), (9, 7), "{dot}");
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let stic = fixture("p_stic");
    let (_, stdout) = run(&["analyze", stic.to_str().unwrap()]);
    let (code, rest) = run(&["analyze", stic.to_str().unwrap(), "--out", path.to_str().unwrap()]);
    assert_eq!((code, rest.as_str()), (3, ""));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout);
}

#[test]
fn repeated_runs_are_identical() {
    let stic = fixture("p_stic");
    let six = fixture("construct_six_sets");
    let s = stic.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["analyze", s],
        vec!["analyze", s, "--construct", "--seed", "3", "--text"],
        vec!["construct", six.to_str().unwrap(), "--seed", "5", "--policies", "3"],
        vec!["oracle", s, "--subsets", "2,3,5", "--threads", "4"],
        vec!["contract", s, "--policy", "random", "--seed", "9"],
        vec!["export-dot", s],
    ];
    for args in commands {
        let a = icode(&args);
        let b = icode(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.status.code(), b.status.code());
    }
}
