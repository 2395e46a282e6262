use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_specialcycles"));
    c.env_remove("SPECIALCYCLES_NODE_BUDGET");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn golden(name: &str) -> Vec<u8> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name].iter().collect();
    std::fs::read(path).expect("golden file")
}

#[test]
fn intersect_small_triple_is_one() {
    let o = run(&["intersect", "--p", "3", "--triple", "0,0,1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o), serde_json::json!({ "value": 1 }));
}

#[test]
fn density_value_at_s1() {
    let o = run(&["density", "--p", "3", "--exponents", "0", "--eval-at-s", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o), serde_json::json!({ "value": "4/3" }));
}

#[test]
fn negative_entry_gives_zero() {
    let o = run(&["intersect", "--p", "5", "--triple", "-1,2,4"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o), serde_json::json!({ "value": 0 }));
}

#[test]
fn kr_check_mode_passes() {
    let o = run(&["intersect", "--p", "7", "--triple", "1,2,4", "--mode", "kr-check"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["pass"], Value::Bool(true));
    assert_eq!(v["lhs"], v["rhs"]);
}

#[test]
fn goldens_match_byte_for_byte() {
    let cases: &[(&[&str], &str)] = &[
        (&["intersect", "--p", "3", "--triple", "0,0,1"], "intersect_p3_001.json"),
        (&["density", "--p", "3", "--exponents", "0,1"], "density_p3_01.json"),
        (
            &["intersect", "--p", "5", "--triple", "1,3,3", "--case", "all-odd/2"],
            "case_all_odd_2_p5_133.json",
        ),
        (
            &["verify", "kr-identity", "--p-list", "3,5", "--max-a3", "5"],
            "verify_kr_p35_a5.json",
        ),
        (
            &["verify", "cases", "--p-list", "3", "--max-a3", "5", "--format", "csv"],
            "verify_cases_p3_a5.csv",
        ),
        (
            &["oracle", "full", "--p", "3", "--k", "1", "--s-diag", "0,0,0", "--t-diag", "0,0"],
            "oracle_full_p3.json",
        ),
    ];
    for (args, file) in cases {
        let o = run(args);
        assert_eq!(code(&o), 0, "{args:?}");
        assert_eq!(o.stdout, golden(file), "{file}");
    }
}

#[test]
fn verify_kr_identity_all_pass() {
    let o = run(&["verify", "kr-identity", "--p-list", "3,5", "--max-a3", "5"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["schema"], "1");
    let rows = v["results"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["pass"] == Value::Bool(true)));
}

#[test]
fn empty_report() {
    let o = run(&["verify", "cases", "--p-list", "3", "--max-a3", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o), serde_json::json!({ "schema": "1", "results": [] }));
    let o = run(&["verify", "cases", "--p-list", "3", "--max-a3", "0", "--format", "csv"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "check,p,input,lhs,rhs,pass\n");
}

#[test]
fn csv_header_matches_json_fields() {
    let j = stdout_json(&run(&["verify", "kr-identity", "--p-list", "3", "--max-a3", "3"]));
    let keys: Vec<String> = j["results"][0].as_object().unwrap().keys().cloned().collect();
    let c = run(&["verify", "kr-identity", "--p-list", "3", "--max-a3", "3", "--format", "csv"]);
    let text = String::from_utf8(c.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), keys.join(","));
    assert_eq!(text.lines().count(), j["results"].as_array().unwrap().len() + 1);
}

#[test]
fn output_is_deterministic() {
    let args = ["verify", "all", "--p-list", "5,3", "--max-a3", "5", "--max-sum", "5"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn results_sorted_by_key() {
    let v = stdout_json(&run(&["verify", "kr-identity", "--p-list", "5,3", "--max-a3", "5"]));
    let ps: Vec<u64> = v["results"].as_array().unwrap().iter().map(|r| r["p"].as_u64().unwrap()).collect();
    let mut sorted = ps.clone();
    sorted.sort();
    assert_eq!(ps, sorted);
}

#[test]
fn output_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("specialcycles-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.json");
    let o = run(&["--output", path.to_str().unwrap(), "intersect", "--p", "3", "--triple", "0,0,1"]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), golden("intersect_p3_001.json"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn exit_codes() {
    let usage: &[&[&str]] = &[
        &["density", "--p", "4", "--exponents", "0"],
        &["density", "--p", "3", "--exponents", "x"],
        &["density", "--p", "3", "--exponents", "0", "--eval-at-s", "1", "--shifted"],
        &["intersect", "--p", "3", "--triple", "0,0,2"],
        &["intersect", "--p", "3", "--triple", "0,1"],
        &["intersect", "--p", "3", "--triple", "1,1,3", "--case", "all-odd/2"],
        &["intersect", "--p", "3", "--triple", "1,1,3", "--case", "bogus"],
        &["verify", "bogus"],
        &["nosuch"],
    ];
    for args in usage {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
    }
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["--budget", "100", "tree", "--p", "3", "--radius", "3", "--cycle", "3"])), 3);
    let o = bin()
        .env("SPECIALCYCLES_NODE_BUDGET", "100")
        .args(["tree", "--p", "3", "--radius", "3", "--cycle", "3"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    assert_eq!(code(&run(&["tree", "--p", "3", "--radius", "1", "--cycle", "5", "--emit", "locus"])), 3);
    assert_eq!(code(&run(&["oracle", "full", "--p", "7", "--k", "4", "--s-diag", "0,0,0", "--t-diag", "0,0"])), 3);
}

#[test]
fn tree_checks_pass() {
    let o = run(&["tree", "--p", "3", "--radius", "2", "--cycle", "1", "--cycle", "3"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["audit"], Value::Bool(true));
    assert!(v["degree_zero"].as_array().unwrap().iter().all(|c| c["pass"] == Value::Bool(true)));
}

#[test]
fn tree_dot_is_text() {
    let o = run(&["tree", "--p", "3", "--radius", "1", "--cycle", "1", "--emit", "dot"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("graph"));
}

#[test]
fn oracle_rank1_matches_density() {
    let o = stdout_json(&run(&["oracle", "rank1", "--p", "3", "--k", "4", "--s", "2", "--a", "1"]));
    let d = stdout_json(&run(&["density", "--p", "3", "--exponents", "1", "--eval-at-s", "2"]));
    assert_eq!(o["normalized"], d["value"]);
}

#[test]
fn stabilize_reports_bool() {
    let o = run(&["oracle", "stabilize", "--p", "3", "--s-diag", "0,0", "--t-diag", "1", "--k-lo", "2", "--k-hi", "3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o), serde_json::json!({ "value": true }));
}

#[test]
fn mismatch_exits_one() {
    let o = run(&["verify", "identities", "--p-list", "3", "--max-sum", "3"]);
    let v = stdout_json(&o);
    let any_fail = v["results"].as_array().unwrap().iter().any(|r| r["pass"] == Value::Bool(false));
    assert_eq!(code(&o), if any_fail { 1 } else { 0 });
}
