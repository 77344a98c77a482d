mod common;

use std::process::{Command, Output};

use common::{oeis_dir, spec_path};
use eulerlaw::cli::{parse_rows_csv, rows_csv, EXIT_IO, EXIT_SPEC, EXIT_UNKNOWN, EXIT_VERIFY};
use eulerlaw::rational::ri;
use eulerlaw::recurrence::generate_rows;
use serde_json::Value;

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eulerlaw"));
    c.args(args).env_remove("EULERLAW_FIXTURES").env_remove("EULERLAW_CACHE").env_remove("EULERLAW_OEIS_ENDPOINT");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn sp(name: &str) -> String {
    spec_path(name).to_string_lossy().into_owned()
}

#[test]
fn generate_rows_sum_to_factorials() {
    let o = run(&["generate", "--spec", &sp("a244312"), "--rows", "8"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let rows = parse_rows_csv(&stdout(&o)).unwrap();
    let mut f = ri(1);
    for (n, p) in &rows {
        if *n > 1 {
            f *= ri(*n - 1);
        }
        assert_eq!(p.eval_one(), f, "n = {n}");
    }
    assert_eq!(rows.len(), 9);
}

#[test]
fn csv_is_exact_and_round_trips() {
    let o = run(&["generate", "--spec", &sp("eulerian"), "--rows", "40"], &[]);
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| !l.contains('e') && !l.contains('.')));
    let rows = parse_rows_csv(&text).unwrap();
    let want = generate_rows(&eulerlaw::recurrence::load_spec(&spec_path("eulerian")).unwrap(), 40).unwrap();
    assert_eq!(rows.iter().map(|r| r.1.clone()).collect::<Vec<_>>(), want);
    assert_eq!(rows_csv(&rows), text);
}

#[test]
fn generate_json_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.json");
    let o = run(&["generate", "--family", "A", "1", "1", "1", "--rows", "3", "--format", "json", "--output", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["rows"][3]["coeffs"], serde_json::json!(["1", "4", "1"]));
}

#[test]
fn classify_outputs() {
    let v = json(&run(&["classify", "--spec", &sp("a039598")], &[]));
    assert_eq!(v["law"]["kind"], "Rayleigh");
    assert!((v["law"]["params"]["sigma"]["decimal"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    let v = json(&run(&["classify", "--spec", &sp("constant")], &[]));
    assert_eq!(v["law"]["kind"], "Degenerate");
    let v = json(&run(&["classify", "--family", "T", "0", "2", "1"], &[]));
    assert_eq!(v["law"]["params"]["mu"]["exact"], "2/3");
    assert_eq!(v["analytic"]["agrees"], true);
}

#[test]
fn strict_unknown_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("neg.spec");
    std::fs::write(&p, "name = \"neg\"\nstart = 0\ninitial = \"1\"\n[class 0]\na = \"v*n-2\"\nb = \"v-v^2\"\n").unwrap();
    let o = run(&["classify", "--spec", p.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["law"]["kind"], "Unknown");
    let o = run(&["classify", "--strict", "--spec", p.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(EXIT_UNKNOWN));
}

#[test]
fn verify_reports_and_fails_on_tight_tolerance() {
    let o = run(&["verify", "--family", "A", "0", "1", "1", "--ns", "100,200,400", "--law", "auto"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["verdict"], "pass");
    assert!(v["records"].as_array().unwrap().iter().all(|r| r["ks"].is_f64()));
    let o = run(&["verify", "--spec", &sp("eulerian"), "--ns", "100", "--tol-ks", "0.01", "--tol-moment", "1e-6"], &[]);
    assert_eq!(o.status.code(), Some(EXIT_VERIFY));
}

#[test]
fn moments_factorial_column() {
    let o = run(&["moments", "--spec", &sp("a008290"), "--rows", "20", "--order", "4"], &[]);
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "factorial2").unwrap();
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        let n: i64 = f[0].parse().unwrap();
        if n >= 2 {
            assert_eq!(f[col], "1", "n = {n}");
        }
    }
}

#[test]
fn oeis_offline_paths() {
    let cache = tempfile::tempdir().unwrap();
    let c = cache.path().to_str().unwrap();
    let fx = oeis_dir();
    let fx = fx.to_str().unwrap();
    let o = run(&["oeis", "--spec", &sp("eulerian"), "--id", "A008292", "--offline", "--cache", c], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["oeis", "--spec", &sp("a060187"), "--id", "A008292", "--offline", "--fixtures", fx, "--cache", c], &[]);
    assert_eq!(o.status.code(), Some(EXIT_VERIFY));
    assert!(json(&o)["first_mismatch"].is_object());
    let empty = tempfile::tempdir().unwrap();
    let e = empty.path().to_str().unwrap();
    let o = run(&["oeis", "--spec", &sp("eulerian"), "--id", "A008292", "--offline", "--fixtures", e, "--cache", c], &[]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["code"], EXIT_IO);
    // the flag wins over the environment
    let o = run(&["oeis", "--spec", &sp("eulerian"), "--id", "A008292", "--offline", "--fixtures", fx, "--cache", c], &[("EULERLAW_FIXTURES", e)]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["oeis", "--spec", &sp("eulerian"), "--id", "A008292", "--offline", "--cache", c], &[("EULERLAW_FIXTURES", e)]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
}

#[test]
fn input_errors() {
    assert_eq!(run(&["generate"], &[]).status.code(), Some(EXIT_SPEC));
    assert_eq!(run(&["generate", "--spec", &sp("eulerian"), "--family", "A", "1", "1", "1"], &[]).status.code(), Some(EXIT_SPEC));
    assert_eq!(run(&["oeis", "--spec", &sp("eulerian"), "--id", "X1"], &[]).status.code(), Some(EXIT_SPEC));
    assert_eq!(run(&["generate", "--spec", "/no/such.spec"], &[]).status.code(), Some(EXIT_IO));
    assert_eq!(run(&["generate", "--family", "A", "1", "-1/2", "1"], &[]).status.code(), Some(EXIT_SPEC));
    assert_eq!(run(&["--help"], &[]).status.code(), Some(0));
}
