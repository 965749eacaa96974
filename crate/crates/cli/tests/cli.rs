//! Runs the built binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn hamtomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamtomo")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_pair_from_file_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let ham = dir.path().join("h.json");
    let out = dir.path().join("run");
    let g = hamtomo(&["generate", "--n-spins", "3", "--seed", "7", "--out", path(&ham)]);
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ham).unwrap()).unwrap();
    assert!(doc.is_object());

    let r = hamtomo(&[
        "pair", "--i", "0", "--j", "2", "--hamiltonian", path(&ham), "--timepoints", "20", "--shots", "200",
        "--resamples", "0", "--error-model", "npe,rre", "--error-mag", "0,0.01", "--out", path(&out),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("J_0_2_xx"));

    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("parameter,truth,estimate,sigma,n_shots,n_timepoints"));
    assert_eq!(lines.count(), 2 * 9);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["models"].as_array().unwrap().len(), 2);
    let curves = std::fs::read_dir(out.join("curves")).unwrap().count();
    assert_eq!(curves, 2 * 9);
}

#[test]
fn field_with_seed_is_reproducible() {
    let args = [
        "field", "--spin", "1", "--n-spins", "3", "--system-seed", "2", "--seed", "5", "--timepoints", "16",
        "--resamples", "0",
    ];
    let a = hamtomo(&args);
    let b = hamtomo(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let strip = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .filter(|l| !l.starts_with("average deviation"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
    assert!(strip(&a).contains("b_1_z"));
}

#[test]
fn survival_suite_passes_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let r = hamtomo(&["verify", "--suite", "survival", "--out", path(dir.path())]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stdout));
    assert!(dir.path().join("verify.json").exists());
}

#[test]
fn invalid_arguments_fail() {
    assert!(!hamtomo(&["pair", "--i", "0", "--j", "0", "--n-spins", "2"]).status.success());
    assert!(!hamtomo(&["scan", "--n-spins", "3", "--error-model", "bogus"]).status.success());
    assert!(!hamtomo(&["scan", "--n-spins", "3", "--tau-j", "-1"]).status.success());
    assert!(!hamtomo(&["pair", "--i", "0", "--j", "5", "--n-spins", "3"]).status.success());
    assert!(!hamtomo(&["scan", "--n-spins", "3", "--error-model", "sae,rre", "--error-mag", "0.1,0.2,0.3"]).status.success());
}
