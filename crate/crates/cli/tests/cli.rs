use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const FAST: [&str; 6] = ["--d", "2", "--max-degree", "2", "--trials", "3"];

fn dfcalc(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dfcalc"));
    cmd.args(args).env_remove("DFCALC_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    dfcalc(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, doc: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, doc.to_string()).unwrap();
    p
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn verify_exit_codes() {
    let mut ok = FAST.to_vec();
    ok.insert(0, "verify");
    assert_eq!(run(&ok).status.code(), Some(0));
    // verify is also the default command
    assert_eq!(run(&FAST).status.code(), Some(0));
    ok.push("--inject-fault");
    assert_eq!(run(&ok).status.code(), Some(1));
    assert_eq!(run(&["--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--d", "0"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--tolerance", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn seed_comes_from_environment() {
    let seeds = |out: &Output| -> Vec<u64> {
        let doc = stdout_json(out);
        doc.as_array().unwrap()[0]["results"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["seed"].as_u64().unwrap())
            .collect()
    };
    let plain = run(&FAST);
    let env = dfcalc(&FAST).env("DFCALC_SEED", "77").output().unwrap();
    assert!(seeds(&plain).iter().all(|&s| s == 1));
    assert!(seeds(&env).iter().all(|&s| s == 77));
    let bad = dfcalc(&FAST).env("DFCALC_SEED", "seven").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verify_writes_csv_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.csv");
    let mut args = FAST.to_vec();
    args.extend(["--format", "csv", "--out", path(&out)]);
    let res = run(&args);
    assert!(res.status.success());
    assert!(res.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,identity,paper_ref,lhs,rhs,pass,seed,trial"));
    assert!(lines.count() > 10);
    // nothing else is left behind in the target directory
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn kernels_of_linear_functional() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "f.json", &json!({"d": 2, "terms": {"1": [1, 0]}}));
    let doc = stdout_json(&run(&["kernels", path(&f)]));
    assert_eq!(doc["f0"], json!("1/2"));
    assert_eq!(doc["kernels"]["1"]["values"], json!(["1/2", "-1/2"]));
    assert_eq!(doc["kernels"]["1"]["in_hn"], json!(true));
    assert_eq!(doc["isometry_norm"], json!("1/12"));

    let rho = write(&dir, "rho.json", &json!({"d": 2, "weights": ["1/2", 1]}));
    let doc = stdout_json(&run(&["kernels", path(&f), "--measure", path(&rho)]));
    // f_1 = g - rho(g) / theta with rho(g) = 1/2, theta = 3/2
    assert_eq!(doc["kernels"]["1"]["values"], json!(["2/3", "-1/3"]));
    assert_eq!(doc["expectation"], json!("1/3"));
}

#[test]
fn kernels_degree_and_constants() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "c.json", &json!({"d": 3, "terms": {"0": "5/2"}}));
    let doc = stdout_json(&run(&["kernels", path(&c)]));
    assert_eq!(doc["kernels"], json!({}));
    assert_eq!(doc["f0"], json!("5/2"));

    let sq = write(&dir, "sq.json", &json!({"d": 2, "terms": {"2": [1, 0, 0, 0]}}));
    let doc = stdout_json(&run(&["kernels", path(&sq)]));
    let kernels = doc["kernels"].as_object().unwrap();
    assert!(kernels.contains_key("2"));
    assert!(!kernels.contains_key("3"));
    assert_eq!(doc["f0"], json!("1/3"));

    let float = stdout_json(&run(&["kernels", path(&sq), "--mode", "float"]));
    assert!((float["f0"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);

    let csv = run(&["kernels", path(&sq), "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("kind,order,index,value\nf0,0,,1/3\n"));
    assert!(text.contains("kernel,2,1.0,"));
}

#[test]
fn kernels_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "f.json", &json!({"d": 2, "terms": {"1": [1, 0, 0]}}));
    assert_eq!(run(&["kernels", path(&f)]).status.code(), Some(2));
    let g = write(&dir, "g.json", &json!({"d": 2, "terms": {"1": [1, 0]}}));
    let rho = write(&dir, "rho.json", &json!({"d": 3, "weights": [1, 1, 1]}));
    assert_eq!(run(&["kernels", path(&g), "--measure", path(&rho)]).status.code(), Some(2));
    assert_eq!(run(&["kernels", "/nonexistent/f.json"]).status.code(), Some(2));
}

#[test]
fn mc_estimate() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "f.json", &json!({"d": 2, "terms": {"1": [1, 0]}}));
    let args = ["mc", path(&f), "--mode", "float", "--samples", "1e5"];
    let first = run(&args);
    let doc = stdout_json(&first);
    assert_eq!(doc["n"], json!(100_000));
    assert_eq!(doc["sampler"], json!("gamma"));
    assert_eq!(doc["exact_ref"], json!(0.5));
    assert!(doc["z_score"].as_f64().unwrap().abs() <= 4.0);
    assert_eq!(run(&args).stdout, first.stdout);

    assert_eq!(run(&["mc", path(&f)]).status.code(), Some(2));
    assert_eq!(run(&["mc", path(&f), "--mode", "float", "--samples", "0"]).status.code(), Some(2));

    let rho = write(&dir, "rho.json", &json!({"d": 2, "weights": [0, 1]}));
    let doc = stdout_json(&run(&["mc", path(&f), "--measure", path(&rho), "--mode", "float", "--samples", "1000"]));
    assert_eq!(doc["mean"], json!(0.0));
    assert_eq!(doc["exact_ref"], json!(0.0));

    let csv = run(&["mc", path(&f), "--mode", "float", "--samples", "1000", "--format", "csv"]);
    assert!(String::from_utf8(csv.stdout).unwrap().starts_with("mean,std_error,n,seed,exact_ref,z_score\n"));
}
