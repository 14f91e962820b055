use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn monoflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monoflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_system(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn order_reports_relation_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = monoflow(&["order", "--x", "0,0", "--y", "1,0", "--json"], &out);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["relation"], "Strict");
    assert_eq!(read_json(&out.join("order.json"))["relation"], "Strict");
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["subcommand"], "order");
    assert_eq!(m["seed"], 0);
    assert_eq!(m["tolerances"]["order"], 1e-6);
    assert!(m["outputs"].as_array().unwrap().iter().any(|f| f == "order.json"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = monoflow(&["order", "--x", "0,0"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
    let o = monoflow(&["simulate", "--system", "/nonexistent/system.json", "--x0", "1"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = monoflow(&["witness", "--A", "1", "--B", "1", "--E", "2"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "InvalidProblem");

    let bad = write_system(dir.path(), "bad.json", r#"{"field":["x1 +"]}"#);
    let o = monoflow(&["simulate", "--system", &bad, "--x0", "1"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn witness_exact_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w");
    let o = monoflow(&["witness", "--A", "2", "--B", "3", "--E", "1/2", "--oracle", "--lmax", "100", "--json"], &out);
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(&out.join("witness.json"));
    assert_eq!(v["l_star"], 2);
    assert_eq!(v["n_star"], 3);
    assert_eq!(v["landing_offset"], "0");
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_system(dir.path(), "decay.json", r#"{"field":["-x1","-2*x2"]}"#);
    let out = dir.path().join("sim");
    let o = monoflow(&["simulate", "--system", &sys, "--x0", "1,1", "--t", "1", "--method", "rk4", "--step", "0.25"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x1,x2");
    assert_eq!(lines.len(), 6);
    let last: Vec<f64> = lines[5].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!((last[1] - (-1f64).exp()).abs() < 1e-4);
}

#[test]
fn certify_linear_system() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_system(dir.path(), "m.json", r#"{"family":"linear","matrix":[[-1,2],[0.5,-3]]}"#);
    let out = dir.path().join("c");
    let o = monoflow(&["certify", "--system", &sys, "--verify", "--trials", "20"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out.join("certify.json"));
    assert_eq!(v["kind"], "CooperativeImmediate");
    assert_eq!(read_json(&out.join("verification.json"))["violations"], 0);
    assert!(out.join("evidence.txt").exists());
}

#[test]
fn oscillation_on_rotation_and_metzler() {
    let dir = tempfile::tempdir().unwrap();
    let rot = write_system(dir.path(), "rot.json", r#"{"field":["-x2","x1"]}"#);
    let out = dir.path().join("rot");
    let o = monoflow(&["oscillation", "--system", &rot, "--x0", "1,0", "--horizon", "7", "--samples", "200"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out.join("oscillation.json"));
    assert_eq!(v["status"], "Oscillating");
    assert_eq!(v["disjoint"], true);
    assert_eq!(v["orbit"], "complete");
    assert!(out.join("counterexample.json").exists());

    let m = write_system(dir.path(), "m.json", r#"{"family":"linear","matrix":[[-0.2,0.1],[0.1,-0.2]]}"#);
    let out = dir.path().join("m");
    let o = monoflow(&["oscillation", "--system", &m, "--x0", "1,0.5", "--samples", "200", "--emit-plot-data"], &out);
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(&out.join("oscillation.json"));
    assert_ne!(v["status"], "Oscillating");
    assert!(out.join("intervals.csv").exists());
}

#[test]
fn limitset_and_floquet_on_embedded_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_system(
        dir.path(),
        "cyc.json",
        r#"{"field":["x1*(1 - x1^2 - x2^2) - x2","x2*(1 - x1^2 - x2^2) + x1","-x3"]}"#,
    );
    let out = dir.path().join("ls");
    let o = monoflow(&["limitset", "--system", &sys, "--x0", "0.1,0,0.5", "--transient", "40", "--window", "7"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out.join("limitset.json"));
    let period = v["period"].as_f64().unwrap();
    assert!((period - 2.0 * std::f64::consts::PI).abs() < 1e-3);
    assert!(out.join("points.csv").exists());

    let out = dir.path().join("fl");
    let p = format!("{}", 2.0 * std::f64::consts::PI);
    let o = monoflow(&["floquet", "--system", &sys, "--point", "1,0,0", "--period", &p], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out.join("floquet.json"));
    assert!(v["liouville_rel_error"].as_f64().unwrap() < 1e-4);
    assert_eq!(v["values"].as_array().unwrap().len(), 3);
}
