use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_korobov-ibc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn family_file(name: &str, json: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("korobov-ibc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

const POWER2: &str = r#"{"alpha":{"kind":"const","value":0},"beta":{"kind":"power","c":1,"s":2},"sigma":{"kind":"const","value":3}}"#;
const CASE2: &str = r#"{"alpha":{"kind":"const","value":0},"beta":{"kind":"power","c":1,"s":0.5},"sigma":{"kind":"affine","a":1,"b":1}}"#;

#[test]
fn spectrum_rows() {
    let o = run(&["spectrum", "--d", "2", "--top", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "rank,eigenvalue,kind,j,k,parity");
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1], "1,1.00000000000000e0,oscillatory,1,1,cos");

    let o = run(&["spectrum", "--top", "0", "--format", "json"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "[]");
}

#[test]
fn complexity_unit_family() {
    let o = run(&["complexity", "--d", "1", "--eps", "0.95", "--crit", "abs"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<_> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "4");
    assert_eq!(row[9], "true");

    let o = run(&["complexity", "--format", "json", "--d", "3,1", "--eps", "0.5,0.2"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let order: Vec<(u64, f64)> =
        v.as_array().unwrap().iter().map(|r| (r["d"].as_u64().unwrap(), r["eps"].as_f64().unwrap())).collect();
    assert_eq!(order, vec![(3, 0.5), (3, 0.2), (1, 0.5), (1, 0.2)]);
}

#[test]
fn empty_grid_is_header_only() {
    let o = run(&["complexity", "--eps", "0.5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["complexity", "--d", "1", "--eps", "1", "--crit", "nor"],
        vec!["complexity", "--d", "0", "--eps", "0.5"],
        vec!["verify-mc", "--samples", "0"],
        vec!["check", "--d", "9"],
        vec!["--tol", "-1", "spectrum"],
        vec!["--threads", "0", "spectrum"],
        vec!["nonsense"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }

    let bad = family_file("bad.json", r#"{"alpha":{"kind":"const","value":0},"beta":{"kind":"const","value":1},"sigma":{"kind":"const","value":0.5}}"#);
    let o = run(&["--family", bad.to_str().unwrap(), "spectrum"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));

    let typo = family_file("typo.json", r#"{"alpha":{"kind":"const","value":0},"beta":{"kind":"const","value":1},"sigma":{"kind":"const","valu":2}}"#);
    let o = run(&["--family", typo.to_str().unwrap(), "spectrum"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tractability_verdicts() {
    let f = family_file("power2.json", POWER2);
    let o = run(&["--family", f.to_str().unwrap(), "--format", "json", "tractability", "--crit", "abs"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["spt"], "true");
    assert!((v["exponent"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let o = run(&["--format", "json", "tractability", "--crit", "abs"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["spt"], "false");
    assert_eq!(v["pt"], true);

    let t = family_file(
        "table.json",
        r#"{"alpha":{"kind":"const","value":0},"beta":{"kind":"table","values":[1,0.25,0.111,0.0625]},"sigma":{"kind":"const","value":3}}"#,
    );
    let o = run(&["--family", t.to_str().unwrap(), "--format", "json", "tractability"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["a_star"]["provenance"], "empirical");
}

#[test]
fn asymptotics_ratio_and_domain() {
    let f = family_file("case2.json", CASE2);
    let fam = f.to_str().unwrap();
    let o = run(&["--family", fam, "--format", "json", "asymptotics", "--d-grid", "100,1000,10000", "--eps", "0.5"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ratios: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["ratio"].as_f64().unwrap()).collect();
    assert!((ratios[2] - 1.0).abs() < (ratios[0] - 1.0).abs());
    assert!((ratios[2] - 1.0).abs() < 0.25);

    let o = run(&["--family", fam, "asymptotics", "--eps", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["asymptotics", "--eps", "0.5"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("not_applicable"));
}

#[test]
fn check_passes_and_detects_fault() {
    let o = run(&["check", "--seeds", "4", "--strict"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!stdout(&o).contains("mismatch"));

    let o = run(&["check", "--seeds", "2", "--inject-fault"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("mismatch"));
    let o = run(&["check", "--seeds", "2", "--inject-fault", "--strict"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_mc_defaults_and_determinism() {
    let args = ["--seed", "7", "--format", "json", "verify-mc"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["K"], 1000);
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["complexity", "--d", "1,10,100", "--eps", "0.1,0.3,0.7", "--crit", "abs"];
    let one = bin().args(["--threads", "1"]).args(args).output().unwrap();
    let many = bin().args(["--threads", "4"]).args(args).output().unwrap();
    assert_eq!(one.stdout, many.stdout);

    let out = std::env::temp_dir().join(format!("korobov-ibc-out-{}.csv", std::process::id()));
    let o = bin().args(["--out", out.to_str().unwrap()]).args(args).output().unwrap();
    assert!(o.status.success() && o.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), one.stdout);
}
