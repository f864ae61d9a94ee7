//! End-to-end tests of the command-line interface: exit codes, canonical
//! output stability, deterministic solves and simulations, method routing.

use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn udisc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_udisc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn read(path: &str) -> String {
    std::fs::read_to_string(path).expect("file readable")
}

fn gen_random(dir: &TempDir, name: &str, seed: u64) -> String {
    let out = path_str(dir, name);
    let status = code(&udisc(&[
        "gen", "--kind", "random", "--dim", "4", "--states", "3", "--ranks", "2,1,2", "--seed",
        &seed.to_string(), "--out", &out,
    ]));
    assert_eq!(status, 0, "gen should succeed");
    out
}

#[test]
fn gen_output_is_canonical() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_random(&dir, "inst.json", 7);
    let text = read(&inst);
    let file: udisc::io::InstanceFile = serde_json::from_str(&text).unwrap();
    let again = udisc::io::to_canonical_json(&file).unwrap();
    assert_eq!(text, again, "parse + re-serialize must be byte-identical");
    assert!(text.ends_with('\n'));
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_random(&dir, "inst.json", 11);
    let a = path_str(&dir, "a.json");
    let b = path_str(&dir, "b.json");
    assert_eq!(code(&udisc(&["solve", &inst, "--out", &a])), 0);
    assert_eq!(code(&udisc(&["solve", &inst, "--out", &b])), 0);
    assert_eq!(read(&a), read(&b), "repeated solves must agree byte for byte");
}

#[test]
fn solve_then_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_random(&dir, "inst.json", 3);
    let sol = path_str(&dir, "sol.json");
    assert_eq!(code(&udisc(&["solve", &inst, "--out", &sol])), 0);
    let out = udisc(&["verify", &inst, &sol]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS"), "verify output: {stdout}");
}

#[test]
fn malformed_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = path_str(&dir, "bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&udisc(&["check", &bad])), 1);
    assert_eq!(code(&udisc(&["solve", &bad])), 1);
    assert_eq!(code(&udisc(&["check", &path_str(&dir, "missing.json")])), 1);
}

#[test]
fn identical_states_check_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // Two copies of the same pure state: every signal space is empty.
    let state = serde_json::json!({
        "matrix": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
        "prior": 0.5,
    });
    let inst = serde_json::json!({
        "dimension": 2,
        "states": [state.clone(), state],
        "symmetry": null,
    });
    let file = path_str(&dir, "same.json");
    std::fs::write(&file, serde_json::to_string(&inst).unwrap()).unwrap();
    let out = udisc(&["check", &file]);
    assert_eq!(code(&out), 2);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("infeasible"), "check output: {stdout}");
}

#[test]
fn corrupted_solution_verify_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_random(&dir, "inst.json", 5);
    let sol = path_str(&dir, "sol.json");
    assert_eq!(code(&udisc(&["solve", &inst, "--out", &sol])), 0);

    let mut report: Value = serde_json::from_str(&read(&sol)).unwrap();
    let z = report["dual"]["z"].as_array_mut().unwrap();
    for row in z {
        for entry in row.as_array_mut().unwrap() {
            for part in entry.as_array_mut().unwrap() {
                let v = part.as_f64().unwrap();
                *part = Value::from(v * 0.5);
            }
        }
    }
    let trace = report["dual"]["trace"].as_f64().unwrap();
    report["dual"]["trace"] = Value::from(trace * 0.5);
    let bad = path_str(&dir, "bad_sol.json");
    std::fs::write(&bad, serde_json::to_string(&report).unwrap()).unwrap();

    let out = udisc(&["verify", &inst, &bad]);
    assert_eq!(code(&out), 3);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("FAIL"), "verify output: {stdout}");
}

#[test]
fn simulate_is_deterministic_and_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_random(&dir, "inst.json", 13);
    let sol = path_str(&dir, "sol.json");
    assert_eq!(code(&udisc(&["solve", &inst, "--out", &sol])), 0);
    let run = |seed: &str| {
        let out = udisc(&["simulate", &inst, &sol, "--shots", "20000", "--seed", seed]);
        assert_eq!(code(&out), 0);
        String::from_utf8(out.stdout).unwrap()
    };
    let a = run("42");
    let b = run("42");
    assert_eq!(a, b, "same seed must reproduce the same counts");
    let report: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(report["wrong_detections"].as_u64(), Some(0));
    assert_ne!(a, run("43"), "different seeds should differ");
}

#[test]
fn pair_benchmark_routes_to_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    // Two equiprobable pure states with overlap 1/sqrt(2):
    // the optimal detection probability is 1 - 1/sqrt(2).
    let h = 0.5_f64;
    let psi0 = serde_json::json!([[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]);
    let psi1 = serde_json::json!([[[h, 0.0], [h, 0.0]], [[h, 0.0], [h, 0.0]]]);
    let inst = serde_json::json!({
        "dimension": 2,
        "states": [
            {"matrix": psi0, "prior": 0.5},
            {"matrix": psi1, "prior": 0.5},
        ],
        "symmetry": null,
    });
    let file = path_str(&dir, "pair.json");
    std::fs::write(&file, serde_json::to_string(&inst).unwrap()).unwrap();
    let sol = path_str(&dir, "sol.json");
    assert_eq!(code(&udisc(&["solve", &file, "--out", &sol])), 0);
    let report: Value = serde_json::from_str(&read(&sol)).unwrap();
    assert_eq!(report["method"].as_str(), Some("pair"));
    let p_detect = report["p_detect"].as_f64().unwrap();
    assert!(
        (p_detect - (1.0 - 0.5_f64.sqrt())).abs() < 1e-12,
        "p_detect {p_detect}"
    );
    assert_eq!(code(&udisc(&["verify", &file, &sol])), 0);
}

#[test]
fn gu_instance_routes_to_reduction() {
    let dir = tempfile::tempdir().unwrap();
    let inst = path_str(&dir, "gu.json");
    assert_eq!(
        code(&udisc(&[
            "gen", "--kind", "gu", "--dim", "5", "--states", "4", "--seed", "2", "--out", &inst,
        ])),
        0
    );
    let sol = path_str(&dir, "sol.json");
    assert_eq!(code(&udisc(&["solve", &inst, "--out", &sol])), 0);
    let report: Value = serde_json::from_str(&read(&sol)).unwrap();
    assert_eq!(report["method"].as_str(), Some("gu"));
    assert_eq!(code(&udisc(&["verify", &inst, &sol])), 0);
}
