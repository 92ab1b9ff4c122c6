use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn su3sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_su3sim")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_kind(o: &Output) -> String {
    let v: Value = serde_json::from_slice(&o.stderr).expect("JSON error on stderr");
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn spectrum_to_stdout() {
    let o = su3sim(&["spectrum", "--m-tilde", "1.2", "--x", "0.8"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let e = v["eigenvalues"].as_array().unwrap();
    assert_eq!(e.len(), 8);
    assert!((e[7].as_f64().unwrap() - 7.626147024901259).abs() < 1e-9);
}

#[test]
fn outputs_and_config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = su3sim(&["evolve", "--mt-max", "1", "--mt-step", "0.25", "--observable", "N", "--observable", "He", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read_to_string(out.join("evolve.csv")).unwrap();
    assert!(first.starts_with("# su3sim evolution v1\ntime,mt,observable,value\n"));
    assert_eq!(first.lines().count(), 2 + 5 * 2);

    // Replaying the saved config reproduces the output.
    let again = dir.path().join("again");
    let cfg = out.join("config.json");
    let o = su3sim(&["evolve", "--config", cfg.to_str().unwrap(), "-o", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(again.join("evolve.csv")).unwrap(), first);
}

#[test]
fn trotter_circuit_formats() {
    let o = su3sim(&["trotter-circuit", "--steps", "2", "--format", "qasm"]);
    assert!(o.status.success());
    let qasm = stdout(&o);
    assert!(qasm.starts_with("OPENQASM 2.0;"));
    assert_eq!(qasm.lines().filter(|l| l.starts_with("cx ")).count(), 20);

    let dir = tempfile::tempdir().unwrap();
    let o = su3sim(&["trotter-circuit", "--variant", "penta4", "--m-tilde", "0.1", "--x", "3", "-o", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let res: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("circuit_resources.json")).unwrap()).unwrap();
    assert!(res.to_string().contains("18"));
}

#[test]
fn resources_table() {
    let o = su3sim(&["resources", "--max-n", "3"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"][0]["closed_form"], 42);
    assert_eq!(v["rows"][1]["closed_form"], 290);
}

#[test]
fn small_noiseless_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "experiment", "--n-trotter", "4", "--randomizations", "4", "--shots", "256", "--t-final", "1", "--noiseless",
        "-o", dir.path().to_str().unwrap(),
    ];
    let o = su3sim(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("experiment.csv")).unwrap();
    assert!(csv.starts_with("# su3sim experiment v1\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 5);
    // Noiseless mitigation runs return exactly to the start.
    for line in csv.lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[2].parse::<f64>().unwrap(), 6.0, "{line}");
    }
}

#[test]
fn fit_reads_evolution_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = su3sim(&["evolve", "--mt-max", "8", "--mt-step", "0.25", "-o", data.to_str().unwrap()]);
    assert!(o.status.success());
    let fit = dir.path().join("fit");
    let csv = data.join("evolve.csv");
    let o = su3sim(&[
        "fit", "--input", csv.to_str().unwrap(), "--k", "2", "--samples", "4000", "--burn-in", "1500", "--chains", "2",
        "--seed", "3", "-o", fit.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s: Value = serde_json::from_str(&fs::read_to_string(fit.join("fit_summary.json")).unwrap()).unwrap();
    let f: Vec<f64> = s["frequencies"].as_array().unwrap().iter().map(|p| p["mean"].as_f64().unwrap()).collect();
    assert!((f[0] - 0.342).abs() < 0.02 && (f[1] - 0.2676).abs() < 0.005, "{f:?}");
    assert!(fs::read_to_string(fit.join("predictive.csv")).unwrap().starts_with("# su3sim predictive v1"));
}

#[test]
fn errors_are_structured() {
    let o = su3sim(&["spectrum", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "usage");

    let o = su3sim(&["spectrum", "--x=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_kind(&o), "invalid_params");

    let o = su3sim(&["experiment", "--n-trotter", "3"]);
    assert_eq!(o.status.code(), Some(1));

    let o = su3sim(&["fit"]);
    assert_eq!(o.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"seeed": 1}"#).unwrap();
    let o = su3sim(&["resources", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
