use std::fs;
use std::path::{Path, PathBuf};

use bose_transit::cli::{run_from_args, verdict, EXIT_FAILED, EXIT_INPUT, EXIT_NUMERICS, EXIT_OK};
use bose_transit::verify::{run_audits, Scenario};
use serde_json::{json, Value};

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("bose-transit").chain(args.iter().copied());
    let code = run_from_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn load(name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(scenario_path(name)).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_outputs_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario_path("result4_chain3");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let (code, out, _) = cli(&["run", file.to_str().unwrap(), "--out", d.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.contains("result4"));
    }
    for f in ["trajectory.csv", "trajectory.json", "report.json", "summary.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let report: Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 2);
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary.starts_with("audit,name,time,lhs,rhs,margin,tolerance,pass"));
}

#[test]
fn checkpoint_override_and_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = load("result4_chain3");
    s["output"] = json!({"formats": ["csv"]});
    let file = write(tmp.path(), "s.json", &s);
    let out = tmp.path().join("o");
    let (code, _, err) = cli(&["run", &file, "--out", out.to_str().unwrap(), "--checkpoints", "0.05,0.15"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.join("trajectory.csv").exists());
    assert!(!out.join("trajectory.json").exists());
    let mut rd = csv::Reader::from_path(out.join("summary.csv")).unwrap();
    let times: Vec<String> = rd.records().map(|r| r.unwrap()[2].to_string()).collect();
    assert!(times.iter().any(|t| t == "0.15"));
    assert!(!times.iter().any(|t| t == "0.1"));

    let (code, _, _) = cli(&["run", &file, "--checkpoints", "0.5"]);
    assert_eq!(code, EXIT_INPUT, "checkpoint beyond T");
}

#[test]
fn input_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"name\": \"x\", \"lattice\": {").unwrap();
    assert_eq!(cli(&["run", bad.to_str().unwrap()]).0, EXIT_INPUT);

    let mut s = load("result4_chain3");
    s["hopping"]["K"] = json!(1.0);
    let file = write(tmp.path(), "unknown.json", &s);
    let (code, _, err) = cli(&["run", &file]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("hopping"), "{err}");

    let mut s = load("result4_chain3");
    s["regions"]["Y"] = json!([0]);
    let file = write(tmp.path(), "overlap.json", &s);
    assert_eq!(cli(&["run", &file]).0, EXIT_INPUT);

    let (code, _, err) = cli(&["run", tmp.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("missing.json"), "{err}");

    assert_eq!(cli(&["frobnicate"]).0, EXIT_INPUT);
}

#[test]
fn large_step_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = load("result1_chain6");
    s["run"]["dt"] = json!(0.5);
    let file = write(tmp.path(), "big.json", &s);
    let (code, _, err) = cli(&["run", &file, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code, EXIT_NUMERICS);
    assert!(err.contains("step too large"), "{err}");
}

#[test]
fn verdict_counts_failures_and_strict_notes() {
    let s = Scenario::load(&scenario_path("result4_chain3")).unwrap();
    let (_, mut reports) = run_audits(&s).unwrap();
    assert_eq!(verdict(&reports, true), EXIT_OK);
    reports[0].ambiguities.push("test note".into());
    assert_eq!(verdict(&reports, false), EXIT_OK);
    assert_eq!(verdict(&reports, true), EXIT_FAILED);
    reports[0].ambiguities.clear();
    reports[1].records[0].pass = false;
    assert_eq!(verdict(&reports, false), EXIT_FAILED);
}

#[test]
fn sweep_aggregates_rows() {
    let tmp = tempfile::tempdir().unwrap();
    fs::copy(scenario_path("result4_chain3"), tmp.path().join("base.json")).unwrap();
    let spec = json!({
        "base": "base.json",
        "axes": [
            {"path": "dissipator.gamma", "values": [0.1, 0.3]},
            {"path": "initial_state.occupations.0", "values": [1, 2]}
        ],
        "parallelism": 2
    });
    let file = write(tmp.path(), "sweep.json", &spec);
    let out = tmp.path().join("o");
    let (code, stdout, _) = cli(&["sweep", &file, "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{stdout}");
    let mut rd = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[1], "dissipator.gamma");
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    // four points, two audits each
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| &r[4] == "true"));

    let spec = json!({"base": "base.json", "axes": [{"path": "run.nope.x", "values": [1]}]});
    let file = write(tmp.path(), "bad_sweep.json", &spec);
    assert_eq!(cli(&["sweep", &file, "--out", out.to_str().unwrap()]).0, EXIT_INPUT);

    let spec = json!({"base": "base.json", "cap": 1, "axes": [{"path": "dissipator.gamma", "values": [0.1, 0.2]}]});
    let file = write(tmp.path(), "capped.json", &spec);
    assert_eq!(cli(&["sweep", &file, "--out", out.to_str().unwrap()]).0, EXIT_INPUT);
}

#[test]
fn bounds_table_and_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = json!({
        "params": {"J": 1, "phi": 2, "alpha": 3, "D": 1, "epsilon": 0.5, "gamma": 1, "gamma1": 0.3, "gamma2": 0.1, "N": 100},
        "inputs": {"d_xy": 10, "tau": 0.1},
        "epsilon_grid": 4
    });
    let file = write(tmp.path(), "b.json", &spec);
    let out = tmp.path().join("o");
    let (code, stdout, _) = cli(&["bounds", &file, "--out", out.to_str().unwrap(), "--strict"]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("MuMaxOneBody"));
    assert!(stdout.contains("B crosscheck"));
    let rows: Value = serde_json::from_slice(&fs::read(out.join("bounds.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 9);
    let mu = rows.as_array().unwrap().iter().find(|r| r["kind"] == "MuMaxOneBody").unwrap();
    // 2 zeta(2) / (e 10)
    let expect = 2.0 * std::f64::consts::PI.powi(2) / 6.0 / (std::f64::consts::E * 10.0);
    assert!((mu["value"].as_f64().unwrap() - expect).abs() < 1e-12);

    let file = write(tmp.path(), "bad.json", &json!({"params": {"J": 1}}));
    let (code, _, err) = cli(&["bounds", &file]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("params"), "{err}");
}

#[test]
fn fuzz_is_clean() {
    let (code, out, _) = cli(&["fuzz", "--seed", "7", "--cases", "40"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("0 mismatches"));
}
