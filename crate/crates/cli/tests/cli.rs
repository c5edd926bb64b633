use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const EXAMPLE: &str = r#"{
  "u0": {"type": "pl1d", "breakpoints": [-1], "slopes": [0, 1], "anchor": 0},
  "u1": {"type": "pl1d", "breakpoints": [-2], "slopes": [0, 0.5], "anchor": 0}
}"#;

const GREEN: &str = r#"{
  "u0": {"type": "pl1d", "breakpoints": [], "slopes": [0], "anchor": 0},
  "u1": {"type": "pl1d", "breakpoints": [], "slopes": [1], "anchor": 0}
}"#;

fn plurigeo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plurigeo"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn with_input(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

/// Parses a two-column CSV with a header.
fn rows(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|x| x.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

#[test]
fn geodesic_energy_table_is_affine() {
    let dir = TempDir::new().unwrap();
    let input = with_input(dir.path(), "ex.json", EXAMPLE);
    let out = plurigeo(dir.path(), &["geodesic", "--input", &input]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&dir.path().join("energy.csv"));
    assert_eq!(table.len(), 11);
    for (t, e) in table {
        assert!((e - (t / 2.0 - 1.0)).abs() <= 1e-12, "t = {t}: {e}");
    }
    let family: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("family.json")).unwrap()).unwrap();
    assert_eq!(family["method"], "legendre");
    assert_eq!(family["slices"].as_array().unwrap().len(), 9);
}

#[test]
fn identical_endpoints_give_a_constant_table() {
    let dir = TempDir::new().unwrap();
    let same = r#"{"u0": {"type": "pl1d", "breakpoints": [-2], "slopes": [0, 0.5], "anchor": 0},
                   "u1": {"type": "pl1d", "breakpoints": [-2], "slopes": [0, 0.5], "anchor": 0}}"#;
    let input = with_input(dir.path(), "same.json", same);
    let out = plurigeo(dir.path(), &["geodesic", "--input", &input, "--t-steps", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&dir.path().join("energy.csv"));
    assert_eq!(table.len(), 5);
    assert!(table.iter().all(|&(_, e)| e == -0.5));
}

#[test]
fn output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let input = with_input(dir.path(), "ex.json", EXAMPLE);
    plurigeo(dir.path(), &["geodesic", "--input", &input]);
    let first = fs::read(dir.path().join("energy.csv")).unwrap();
    plurigeo(dir.path(), &["geodesic", "--input", &input]);
    assert_eq!(first, fs::read(dir.path().join("energy.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    // 17 significant digits
    assert!(text.contains("1.0000000000000001e-1,"));
}

#[test]
fn green_pair_exits_with_collapse_report() {
    let dir = TempDir::new().unwrap();
    let input = with_input(dir.path(), "green.json", GREEN);
    let out = plurigeo(dir.path(), &["geodesic", "--input", &input, "--S", "2", "--h", "0.1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("collapse.json"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("collapse.json")).unwrap()).unwrap();
    assert_eq!(report["collapse"], true);
    assert_eq!(report["ok"], true);
    assert!(!dir.path().join("family.json").exists());
}

#[test]
fn capacity_curve_of_thresholds() {
    let dir = TempDir::new().unwrap();
    let input = with_input(
        dir.path(),
        "cap.json",
        r#"{"sets": [{"n": 1, "threshold": 1}, {"n": 1, "threshold": 2}]}"#,
    );
    let out = plurigeo(dir.path(), &["capacity", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&dir.path().join("capacity.csv"));
    assert_eq!(table.len(), 11);
    for (t, cap) in table {
        assert!((cap - 1.0 / (1.0 + t)).abs() <= 1e-12);
    }
}

#[test]
fn single_and_equal_sets() {
    let dir = TempDir::new().unwrap();
    let one = with_input(dir.path(), "one.json", r#"{"sets": [{"n": 1, "threshold": 1}]}"#);
    let out = plurigeo(dir.path(), &["capacity", "--input", &one, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("capacity.json")).unwrap()).unwrap();
    assert_eq!(v["capacity"], 1.0);

    let box2 = r#"{"n": 2, "constraints": [{"a": [1, 0], "b": -1}, {"a": [0, 1], "b": -1}]}"#;
    let pair = with_input(
        dir.path(),
        "pair.json",
        &format!(r#"{{"sets": [{box2}, {box2}], "t": [0.5]}}"#),
    );
    let out = plurigeo(
        dir.path(),
        &[
            "capacity", "--input", &pair, "--S", "2", "--h", "0.1", "--format", "json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("capacity.json")).unwrap()).unwrap();
    assert_eq!(v["rows"][0]["margin"].as_f64().unwrap().abs(), 0.0);
}

#[test]
fn energy_report_for_the_example_pair() {
    let dir = TempDir::new().unwrap();
    let input = with_input(
        dir.path(),
        "en.json",
        &EXAMPLE.replace("\"u0\"", "\"u\"").replace("\"u1\"", "\"v\""),
    );
    let out = plurigeo(dir.path(), &["energy", "--input", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("energy.json")).unwrap()).unwrap();
    assert_eq!(v["energy"], -1.0);
    assert_eq!(v["pair"]["balance"]["mixed_vector"], serde_json::json!([-0.5, -1.0]));
    assert_eq!(v["pair"]["balance"]["balance_ok"], false);
}

#[test]
fn validation_failures_exit_one() {
    let dir = TempDir::new().unwrap();
    let input = with_input(dir.path(), "ex.json", EXAMPLE);
    let bad = with_input(
        dir.path(),
        "bad.json",
        r#"{"u0": {"type": "pl1d", "breakpoints": [-1], "slopes": [1, 0], "anchor": 0}, "u1": {"type": "pl1d", "breakpoints": [], "slopes": [0], "anchor": 0}}"#,
    );
    let cases: Vec<Vec<&str>> = vec![
        vec!["geodesic"],
        vec!["geodesic", "--input", "missing.json"],
        vec!["geodesic", "--input", &bad],
        vec!["geodesic", "--input", &input, "--h", "0.03", "--S", "4"],
        vec!["geodesic", "--input", &input, "--tol", "-1"],
        vec!["verify", "--only", "13"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = plurigeo(dir.path(), &args);
        assert_eq!(
            out.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn thread_cap_is_validated() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_plurigeo"))
        .args(["verify", "--only", "11", "--out"])
        .arg(dir.path())
        .env("PLURIGEO_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_plurigeo"))
        .args(["verify", "--only", "11", "--out"])
        .arg(dir.path())
        .env("PLURIGEO_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_passes_by_default() {
    let dir = TempDir::new().unwrap();
    let out = plurigeo(dir.path(), &["verify", "--format", "json"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.matches("[PASS]").count(), 12);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 12);
}

#[test]
fn dropping_the_factorial_exits_two() {
    let dir = TempDir::new().unwrap();
    let out = plurigeo(dir.path(), &["verify", "--drop-factorial", "--only", "12"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("criterion 12 [FAIL]"));
}

#[test]
fn seed_does_not_change_the_verdicts() {
    let dir = TempDir::new().unwrap();
    let verdicts = |seed: &str| {
        let out = plurigeo(dir.path(), &["verify", "--only", "5,6,7,8,9", "--seed", seed]);
        assert_eq!(out.status.code(), Some(0));
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
        v["criteria"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| (c["id"].as_u64().unwrap(), c["pass"].as_bool().unwrap()))
            .collect::<Vec<_>>()
    };
    assert_eq!(verdicts("1"), verdicts("99"));
}
