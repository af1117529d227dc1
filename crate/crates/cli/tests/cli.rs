use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ordgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordgame"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not a report ({e}):\n{}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn dump(name: &str, dir: &Path) -> String {
    let path = dir.join(format!("{name}.json"));
    let out = ordgame(&["examples", "--name", name, "--dump", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn coordinate_example_solves_to_the_corner() {
    let dir = tempfile::tempdir().unwrap();
    let file = dump("coordinate-pref", dir.path());
    let out = ordgame(&["solve", &file]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    let point: Vec<&Value> = r["solution"]["point"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|b| b.as_array().unwrap())
        .collect();
    assert_eq!(point.len(), 2);
    for v in &point {
        assert!((v.as_f64().unwrap() - 1.0).abs() < 1e-6, "{point:?}");
    }
    assert_eq!(r["certificates"][0]["kind"], "gne-grid");
    assert_eq!(r["certificates"][0]["passed"], true);
    assert_eq!(r["seed"], 42);
}

#[test]
fn trivial_game_warns_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dump("trivial-pref", dir.path());
    let out = ordgame(&["solve", &file]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["warnings"][0], "degenerate: empty strict preference");
    for c in r["solution"]["operator_value"]["components"].as_array().unwrap() {
        assert_eq!(c["source"], "full-space");
    }
    assert_eq!(r["certificates"][0]["passed"], true);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let trivial = dump("trivial-pref", dir.path());
    let coordinate = dump("coordinate-pref", dir.path());
    assert_eq!(
        code(&ordgame(&["verify", &trivial, "--point", "0,0", "--grid", "0.05"])),
        0
    );
    let failing = ordgame(&["verify", &coordinate, "--point", "0,0"]);
    assert_eq!(code(&failing), 2);
    let r = json(&failing);
    // the witness is the deviating player's own block
    assert_eq!(r["certificates"][0]["witness"]["player"], 0);
    assert_eq!(r["certificates"][0]["witness"]["point"].as_array().unwrap().len(), 1);
    assert_eq!(code(&ordgame(&["verify", &coordinate, "--point", "1,1"])), 0);
    assert_eq!(code(&ordgame(&["verify", &coordinate, "--point", "-1,-1"])), 2);
    // outside the box
    let infeasible = ordgame(&["verify", &coordinate, "--point", "2,0"]);
    assert_eq!(code(&infeasible), 1);
    assert!(!json(&infeasible)["errors"].as_array().unwrap().is_empty());
    // wrong length
    assert_eq!(code(&ordgame(&["verify", &coordinate, "--point", "1"])), 1);
}

#[test]
fn malformed_file_reports_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"players\": [\n    {\"dim\": 1,, }\n  ]\n}\n").unwrap();
    let out = ordgame(&["solve", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "{stderr}");
    assert!(stderr.contains("column"), "{stderr}");
}

#[test]
fn missing_file_is_an_error() {
    let out = ordgame(&["solve", "/nonexistent/game.json"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("reading"));
}

#[test]
fn dump_parse_dump_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["trivial-pref", "coordinate-pref", "quadratic", "arrow-debreu"] {
        let first = fs::read_to_string(dump(name, dir.path())).unwrap();
        let stdout = ordgame(&["examples", "--name", name, "--dump"]);
        assert_eq!(String::from_utf8(stdout.stdout).unwrap(), first);
        let parsed = ordgame::GameSpec::from_json(&first).unwrap();
        assert_eq!(parsed.to_json(), first, "{name}");
    }
    assert_eq!(code(&ordgame(&["examples", "--name", "lhc-remark", "--dump"])), 1);
}

#[test]
fn example_runs() {
    let lhc = ordgame(&["examples", "--name", "lhc-remark", "--run"]);
    assert_eq!(code(&lhc), 0);
    let r = json(&lhc);
    let certs = r["certificates"].as_array().unwrap();
    assert_eq!(certs[0]["passed"], true);
    assert_eq!(certs[1]["passed"], false);
    assert_eq!(certs[1]["expected_failure"], true);

    let trivial = json(&ordgame(&["examples", "--name", "trivial-pref", "--run"]));
    let certs = trivial["certificates"].as_array().unwrap();
    assert_eq!(
        (certs[0]["kind"].as_str(), certs[0]["passed"].as_bool()),
        (Some("gne-grid"), Some(true))
    );
    assert_eq!(
        (certs[1]["kind"].as_str(), certs[1]["passed"].as_bool()),
        (Some("svip"), Some(false))
    );
    assert_eq!(certs[1]["expected_failure"], true);

    for name in ["coordinate-pref", "quadratic", "arrow-debreu"] {
        let out = ordgame(&["examples", "--name", name, "--run"]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
    assert_eq!(code(&ordgame(&["examples", "--name", "nope", "--run"])), 1);
}

#[test]
fn examples_without_a_name_lists_them() {
    let out = ordgame(&["examples"]);
    assert_eq!(code(&out), 0);
    let names: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(
        names,
        [
            "trivial-pref",
            "coordinate-pref",
            "lhc-remark",
            "quadratic",
            "arrow-debreu"
        ]
    );
}

#[test]
fn theorem_suites_pass_and_are_reproducible() {
    for suite in ["t1", "t2", "existence"] {
        let args = [
            "theorems",
            "--suite",
            suite,
            "--instances",
            "4",
            "--seed",
            "7",
            "--grid",
            "0.1",
        ];
        let a = ordgame(&args);
        assert_eq!(code(&a), 0, "{suite}: {}", String::from_utf8_lossy(&a.stdout));
        let mut ra = json(&a);
        let mut rb = json(&ordgame(&args));
        assert_eq!(ra["summary"]["passed"], true);
        ra["wall_time_s"] = Value::Null;
        rb["wall_time_s"] = Value::Null;
        assert_eq!(ra, rb);
    }
    let t2 = json(&ordgame(&[
        "theorems",
        "--suite",
        "t2",
        "--instances",
        "2",
        "--grid",
        "0.1",
    ]));
    assert_eq!(t2["certificates"][1]["expected_failure"], true);
    assert_eq!(code(&ordgame(&["theorems", "--suite", "t1", "--instances", "0"])), 1);
}

#[test]
fn reports_go_to_the_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let file = dump("quadratic", dir.path());
    let report = dir.path().join("report.json");
    let out = ordgame(&["solve", &file, "--out", report.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["seed"], 3);
    assert_eq!(r["command"][0], "solve");
    // only the report itself, no leftover temporaries
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn unconverged_solve_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dump("quadratic", dir.path());
    let out = ordgame(&["solve", &file, "--max-iters", "1", "--restarts", "1"]);
    assert_eq!(code(&out), 2);
    let r = json(&out);
    assert_eq!(r["solution"]["converged"], false);
    assert!(r["warnings"][0]
        .as_str()
        .unwrap()
        .starts_with("solver did not converge"));
}

#[test]
fn bad_solver_flags_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let file = dump("quadratic", dir.path());
    assert_eq!(code(&ordgame(&["solve", &file, "--step", "0"])), 1);
    assert_eq!(code(&ordgame(&["solve", &file, "--grid", "-1"])), 1);
}
