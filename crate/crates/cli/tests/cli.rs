use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lbsgain_core::scenario::preset_file;
use serde_json::{json, Value};

fn lbsgain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lbsgain")).args(args).output().expect("spawn lbsgain")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn preset_json(name: &str) -> Value {
    serde_json::to_value(preset_file(name).unwrap()).unwrap()
}

fn write_scenario(dir: &Path, file: &str, value: &Value) -> PathBuf {
    let path = dir.join(file);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn metrics(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_preset_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("e1");
    let res = lbsgain(&["run", "example1", "--out", p(&out), "--T", "5"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["trajectory.csv", "switches.csv", "summary.txt", "metrics.json", "plot.py"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x1,x2,x3,xhat1,xhat2,xhat3,u,r,m,chi,omega\n"));
    assert!(fs::read_to_string(out.join("switches.csv")).unwrap().starts_with("m,t_m,r_m\n1,0"));
    assert!(stdout(&res).contains("status: completed"));
    assert_eq!(metrics(&out)["status"]["status"], "completed");
}

#[test]
fn step_and_horizon_overrides_apply() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let res = lbsgain(&["run", "example2-case6", "--out", p(&out), "--h", "0.002", "--T", "3"]);
    assert_eq!(code(&res), 0);
    let m = metrics(&out);
    assert_eq!(m["sim"]["step_h"], 0.002);
    assert_eq!(m["sim"]["horizon"], 3.0);
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let last_t: f64 = traj.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((last_t - 3.0).abs() < 1e-9);

    let bad = lbsgain(&["run", "example1", "--out", p(&out), "--h", "-1"]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn zero_state_chain_converges_at_once() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = preset_json("example2-case6");
    s["name"] = json!("quiet-chain");
    s["plant"] = json!({ "kind": "chain", "n": 3 });
    s["x0"] = json!([0.0, 0.0, 0.0]);
    s["sim"]["horizon"] = json!(2.0);
    let path = write_scenario(tmp.path(), "chain.json", &s);
    let out = tmp.path().join("o");
    let res = lbsgain(&["run", p(&path), "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let m = metrics(&out);
    assert_eq!(m["metrics"]["convergence_time"], 0.0);
    assert_eq!(m["metrics"]["switch_count"], 0);
}

fn unstable_open_loop() -> Value {
    json!({
        "name": "unstable",
        "plant": {
            "kind": "linear",
            "state_gain": [[1.5, 0.0], [0.0, 0.0]],
            "input_gain": [0.0, 0.0],
            "p": 0.0,
            "theta": 1.5,
            "gamma": { "kind": "constant", "value": 1.0 }
        },
        "coeffs": { "a": [2.0, 1.0], "b": [1.0, 2.0] },
        "strategy": { "kind": "open-loop" },
        "sim": { "step_h": 0.01, "horizon": 60.0 },
        "x0": [1.0, 0.0]
    })
}

#[test]
fn divergence_exits_two_with_partial_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(tmp.path(), "unstable.json", &unstable_open_loop());
    let out = tmp.path().join("o");
    let res = lbsgain(&["run", p(&path), "--out", p(&out)]);
    assert_eq!(code(&res), 2);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("diverged at t ="));
    assert!(summary.contains("trajectory.csv is partial"));
    assert_eq!(metrics(&out)["status"]["status"], "diverged");
}

#[test]
fn unwritable_output_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let res = lbsgain(&["run", "example1", "--out", p(&blocker.join("sub")), "--T", "1"]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("error:"));
}

#[test]
fn unknown_scenario_and_bad_arguments_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&lbsgain(&["run", "no-such-preset", "--out", p(tmp.path())])), 1);
    assert_eq!(code(&lbsgain(&["run", "example1"])), 1);
    assert_eq!(code(&lbsgain(&["frobnicate"])), 1);
    assert_eq!(code(&lbsgain(&["--help"])), 0);
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert_eq!(code(&lbsgain(&["run", "example2-case5", "--out", p(dir), "--T", "20"])), 0);
    }
    for f in ["trajectory.csv", "switches.csv", "metrics.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn compare_needs_two_scenarios() {
    let tmp = tempfile::tempdir().unwrap();
    let res = lbsgain(&["compare", "example2-case5", "--out", p(tmp.path())]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("at least 2"));
}

#[test]
fn compare_identical_runs_reports_equal() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = preset_json("example2-case5");
    s["sim"]["horizon"] = json!(10.0);
    let path = write_scenario(tmp.path(), "c5.json", &s);
    let out = tmp.path().join("cmp");
    let res = lbsgain(&["compare", p(&path), p(&path), "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("example2-case5 vs example2-case5-2: convergence_time equal, peak_abs_x1 equal"), "{report}");
    assert!(out.join("example2-case5/trajectory.csv").is_file());
    assert!(out.join("example2-case5-2/trajectory.csv").is_file());
    assert!(out.join("overlay.py").is_file());
    let json: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn compare_orders_the_fastest_strategies() {
    let tmp = tempfile::tempdir().unwrap();
    let mut names = Vec::new();
    for case in ["example2-case5", "example2-case6"] {
        let mut s = preset_json(case);
        s["sim"]["horizon"] = json!(80.0);
        names.push(write_scenario(tmp.path(), &format!("{case}.json"), &s));
    }
    let out = tmp.path().join("cmp");
    let res = lbsgain(&["compare", p(&names[0]), p(&names[1]), "--out", p(&out)]);
    assert_eq!(code(&res), 0);
    assert!(stdout(&res).contains("example2-case5 vs example2-case6: convergence_time greater, peak_abs_x1 greater"));
}

#[test]
fn compare_rejects_different_plants() {
    let tmp = tempfile::tempdir().unwrap();
    let res = lbsgain(&["compare", "example1", "example2-case5", "--out", p(tmp.path())]);
    assert_eq!(code(&res), 1);
}

#[test]
fn validate_presets_pass() {
    for name in ["example1", "example2-case5", "example2-case6", "example2-case1"] {
        let res = lbsgain(&["validate", name]);
        assert_eq!(code(&res), 0, "{name}: {}", stdout(&res));
        assert!(!stdout(&res).contains("[FAIL]"));
    }
}

#[test]
fn validate_flags_decreasing_sigma_bar() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = preset_json("example1");
    s["strategy"]["sequences"]["sigma_bar"] = json!({ "kind": "linear", "c": -0.5, "d": 400.0 });
    let path = write_scenario(tmp.path(), "bad.json", &s);
    let res = lbsgain(&["validate", p(&path)]);
    assert_eq!(code(&res), 1);
    assert!(stdout(&res).contains("[FAIL] sigma_bar: sigma_bar not increasing (m = 1)"), "{}", stdout(&res));
}

#[test]
fn validate_flags_growth_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = preset_json("example1");
    s["plant"] = json!({
        "kind": "linear",
        "state_gain": [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
        "input_gain": [0.0, 0.0, 0.0],
        "p": 0.4,
        "theta": 1.0,
        "gamma": { "kind": "constant", "value": 1.0 }
    });
    let path = write_scenario(tmp.path(), "np.json", &s);
    let res = lbsgain(&["validate", p(&path)]);
    assert_eq!(code(&res), 1);
    assert!(stdout(&res).contains("np ≥ 1 violates Assumption 1 range"), "{}", stdout(&res));
}

#[test]
fn validate_flags_non_hurwitz_and_bad_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = preset_json("example1");
    s["coeffs"]["a"] = json!([1.0, 1.0, 5.0]);
    let path = write_scenario(tmp.path(), "h1.json", &s);
    let res = lbsgain(&["validate", p(&path)]);
    assert_eq!(code(&res), 1);
    assert!(stdout(&res).contains("h₁ not Hurwitz"));

    s["unexpected"] = json!(1);
    let path = write_scenario(tmp.path(), "schema.json", &s);
    let res = lbsgain(&["validate", p(&path)]);
    assert_eq!(code(&res), 1);
    assert!(stdout(&res).starts_with("[FAIL] schema"));
}

#[test]
fn bundled_scenario_files_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let res = lbsgain(&["validate", p(&path)]);
            assert_eq!(code(&res), 0, "{}: {}", path.display(), stdout(&res));
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn run_rejects_invalid_coefficients() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = preset_json("example1");
    s["coeffs"]["a"] = json!([0.0, 1.0, 1.0]);
    let path = write_scenario(tmp.path(), "zero-pivot.json", &s);
    let res = lbsgain(&["run", p(&path), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("h₁ not Hurwitz"));
    assert!(!tmp.path().join("o").exists());
}
