use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjhomog"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const FREE: &str = "problem.u0.kind = clamp\nprobes = [(0, 1), (-0.5, 0.5)]\nepsilon = [0.25, 0.125, 0.0625, 0.03125]\n";

#[test]
fn rate_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "free.cfg", FREE);
    let first = run(dir.path(), &["rate", "--config", "free.cfg", "--out", "a"]);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let second = run(dir.path(), &["rate", "--config", "free.cfg", "--out", "b"]);
    assert_eq!(second.status.code(), Some(0));
    for name in ["rate.csv", "rate_probes.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    let csv = std::fs::read_to_string(dir.path().join("a/rate.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("epsilon,sup_error,slope_running,certificate_bound,cross_oracle_gap,config_hash"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "bad.cfg", "window.R = 1\nepsilon = [0.1, 0.2]\n");
    let out = run(dir.path(), &["rate", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let missing = run(dir.path(), &["check", "--config", "missing.cfg"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn failed_audit_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "low.cfg",
        "problem.potential.b = cos2pi_minus1\nproblem.potential.shift = -0.5\nepsilon = [0.25, 0.125]\n",
    );
    let check = run(dir.path(), &["check", "--config", "low.cfg", "--out", "o"]);
    assert_eq!(check.status.code(), Some(1));
    let table = std::fs::read_to_string(dir.path().join("o/check.txt")).unwrap();
    let a1 = table.lines().find(|l| l.starts_with("A1 ")).unwrap();
    assert!(a1.contains("FAIL") && a1.contains("witness"), "{a1}");
    let rate = run(dir.path(), &["rate", "--config", "low.cfg", "--out", "o"]);
    assert_eq!(rate.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&rate.stderr).contains("--force"));
}

#[test]
fn solve_reports_both_evaluators() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "cell.cfg",
        "problem.potential.b = cos2pi_minus1\nprobes = [(0.25, 0.5)]\nepsilon = [0.25]\n",
    );
    let out = run(dir.path(), &["solve", "--config", "cell.cfg", "--evaluator", "both"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    for key in ["\"u_eps\"", "\"u_eps_fd\"", "\"cross_oracle_gap\"", "\"u\"", "\"winner\""] {
        assert!(text.contains(key), "{key} missing from {text}");
    }
    let moved = run(dir.path(), &["solve", "--config", "cell.cfg", "--x0", "-0.5", "--t0", "0.25", "--eps", "0.125"]);
    assert_eq!(moved.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&moved.stdout).contains("\"x0\": -0.5"));
}

#[test]
fn dumps_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "cell.cfg",
        "problem.potential.b = cos2pi_minus1\nprobes = [(0, 0.5)]\nepsilon = [0.25]\n",
    );
    let paths = run(dir.path(), &["dump-paths", "--config", "cell.cfg", "--out", "o"]);
    assert_eq!(paths.status.code(), Some(0), "{}", String::from_utf8_lossy(&paths.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/paths.csv")).unwrap();
    assert!(csv.starts_with("epsilon,x0,t0,path,branch,r,s,eta,x,config_hash"));
    assert!(csv.contains(",gamma+,") && csv.contains(",gamma-,"));
}
