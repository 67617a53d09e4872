use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn gbs_tn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbs-tn"))
        .args(args)
        .env_remove("GBS_TN_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_lines(out: &Output) -> Vec<Value> {
    stdout(out).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn gen_circuit(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["gen", "--output", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = gbs_tn(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn gates(circuit: &Value) -> Vec<&Value> {
    circuit["layers"].as_array().unwrap().iter().flat_map(|l| l.as_array().unwrap()).collect()
}

#[test]
fn gen_writes_a_brickwork_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = gen_circuit(dir.path(), "a.json", &["--modes", "4", "--depth", "4", "--seed", "7"]);
    let b = gen_circuit(dir.path(), "b.json", &["--modes", "4", "--depth", "4", "--seed", "7"]);
    let c = gen_circuit(dir.path(), "c.json", &["--modes", "4", "--depth", "4", "--seed", "8"]);
    assert_eq!(gates(&read_json(&a)).len(), 6);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn gen_gamma_applies_to_every_gate() {
    let dir = TempDir::new().unwrap();
    let path = gen_circuit(dir.path(), "lossy.json", &["--modes", "5", "--gamma", "0.05"]);
    let circuit = read_json(&path);
    let gates = gates(&circuit);
    assert!(!gates.is_empty());
    assert!(gates.iter().all(|g| g["loss_gamma"].as_f64() == Some(0.05)));
}

#[test]
fn unwritable_output_names_the_path() {
    let target = "/nonexistent-dir/sub/circuit.json";
    let out = gbs_tn(&["gen", "--modes", "2", "--output", target]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(target));
}

#[test]
fn vacuum_through_identity_has_unit_probability_on_every_backend() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("identity.json");
    std::fs::write(&path, r#"{"num_modes": 3, "layers": []}"#).unwrap();
    for backend in ["tn", "dense", "gaussian"] {
        for picture in ["heisenberg", "schrodinger"] {
            let out = gbs_tn(&[
                "prob",
                "--circuit",
                path.to_str().unwrap(),
                "--outcome",
                "0,0,0",
                "--backend",
                backend,
                "--picture",
                picture,
            ]);
            assert!(out.status.success(), "{backend}: {}", String::from_utf8_lossy(&out.stderr));
            let rec = &json_lines(&out)[0];
            assert!((rec["probability"].as_f64().unwrap() - 1.0).abs() < 1e-14, "{backend} {picture}: {rec}");
        }
    }
}

fn probabilities(records: &[Value]) -> Vec<f64> {
    records.iter().map(|r| r["probability"].as_f64().unwrap()).collect()
}

#[test]
fn backends_agree_on_a_lossless_circuit() {
    let dir = TempDir::new().unwrap();
    let path = gen_circuit(dir.path(), "c.json", &["--modes", "4", "--seed", "11"]);
    let run = |extra: &[&str]| {
        let mut args = vec![
            "prob",
            "--circuit",
            path.to_str().unwrap(),
            "--all-with-total",
            "2",
            "--all-with-total",
            "4",
            "--squeezing",
            "0.4",
            "--cutoff",
            "8",
        ];
        args.extend_from_slice(extra);
        let out = gbs_tn(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        probabilities(&json_lines(&out))
    };
    let reference = run(&["--backend", "gaussian"]);
    assert_eq!(reference.len(), 10 + 35);
    for other in [run(&[]), run(&["--picture", "schrodinger"]), run(&["--backend", "dense"])] {
        for (a, b) in reference.iter().zip(&other) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn lossy_tn_matches_dense_through_the_cli() {
    let dir = TempDir::new().unwrap();
    let path = gen_circuit(dir.path(), "c.json", &["--modes", "3", "--seed", "4", "--gamma", "0.05"]);
    let run = |backend: &str| {
        let out = gbs_tn(&[
            "prob",
            "--circuit",
            path.to_str().unwrap(),
            "--outcome",
            "1,0,1",
            "--outcome",
            "0,2,0",
            "--squeezing",
            "0.4",
            "--cutoff",
            "4",
            "--backend",
            backend,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        probabilities(&json_lines(&out))
    };
    for (a, b) in run("tn").iter().zip(run("dense")) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn no_timing_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let path = gen_circuit(dir.path(), "c.json", &["--modes", "4", "--seed", "2"]);
    let run = |flag: Option<&str>| {
        let mut args = vec!["prob", "--circuit", path.to_str().unwrap(), "--all-with-total", "2", "--squeezing", "0.3"];
        args.extend(flag);
        let out = gbs_tn(&args);
        assert!(out.status.success());
        stdout(&out)
    };
    assert_eq!(run(Some("--no-timing")), run(Some("--no-timing")));
    assert!(json_lines_of(&run(None)).iter().all(|r| r["wall_time"].is_number()));
    assert!(json_lines_of(&run(Some("--no-timing"))).iter().all(|r| r.get("wall_time").is_none()));
}

fn json_lines_of(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn partial_failure_keeps_good_records_and_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let path = gen_circuit(dir.path(), "c.json", &["--modes", "4", "--seed", "1"]);
    let out = gbs_tn(&[
        "prob",
        "--circuit",
        path.to_str().unwrap(),
        "--outcome",
        "1,1,0,0",
        "--outcome",
        "3,0,0,0",
        "--squeezing",
        "0.4",
        "--cutoff",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let records = json_lines(&out);
    assert_eq!(records.len(), 2);
    assert!(records[0]["probability"].is_number() && records[0].get("error").is_none());
    assert!(records[1]["probability"].is_null() && records[1]["error"].is_string());
}

#[test]
fn gaussian_backend_rejects_non_uniform_loss() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("mixed.json");
    std::fs::write(
        &path,
        r#"{"num_modes": 3, "layers": [
            [{"modes": [0, 1], "theta": 0.3, "varphi": 0.1, "phi": 0.2, "loss_gamma": 0.05}],
            [{"modes": [1, 2], "theta": 0.7, "varphi": 0.4, "phi": 0.9, "loss_gamma": 0.1}]
        ]}"#,
    )
    .unwrap();
    let out = gbs_tn(&[
        "prob",
        "--circuit",
        path.to_str().unwrap(),
        "--outcome",
        "1,1,0",
        "--backend",
        "gaussian",
        "--cutoff",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gate 1"), "{err}");
}

#[test]
fn cutoff_reports_the_rule_result() {
    let out = gbs_tn(&[
        "cutoff",
        "--modes",
        "4",
        "--gamma",
        "0.05",
        "--num-sources",
        "6",
        "--squeezing",
        "0.5",
        "--n-tilde",
        "4",
    ]);
    assert!(out.status.success());
    let rec = &json_lines(&out)[0];
    assert_eq!(rec["n_c"].as_u64(), Some(14));
    assert!(rec["delta"].as_f64().unwrap() <= 1e-6);

    let lossless = gbs_tn(&[
        "cutoff", "--modes", "4", "--gamma", "0", "--num-sources", "6", "--squeezing", "0.5", "--n-tilde", "4",
    ]);
    assert_eq!(json_lines(&lossless)[0]["n_c"].as_u64(), Some(4));
}

#[test]
fn cutoff_takes_parameters_from_a_circuit() {
    let dir = TempDir::new().unwrap();
    let path = gen_circuit(dir.path(), "c.json", &["--modes", "4", "--gamma", "0.05"]);
    let out = gbs_tn(&["cutoff", "--circuit", path.to_str().unwrap(), "--squeezing", "0.5", "--n-tilde", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = &json_lines(&out)[0];
    assert_eq!(rec["num_sources"].as_u64(), Some(6));
    assert_eq!(rec["n_c"].as_u64(), Some(14));
}

#[test]
fn scaling_csv_has_expected_shape() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("scaling.csv");
    let out = gbs_tn(&["scaling", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["M", "r", "n_mode", "D_heisenberg", "D_schrodinger", "out_of_regime"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 13 * 5);

    let mut ratios = Vec::new();
    for row in &rows {
        let out_of_regime: bool = row[5].parse().unwrap();
        if out_of_regime {
            assert!(row[3].is_empty() && row[4].is_empty());
            continue;
        }
        let (dh, ds): (f64, f64) = (row[3].parse().unwrap(), row[4].parse().unwrap());
        assert!(dh >= 1.0 && ds >= 1.0);
        if &row[1] == "0.5" {
            ratios.push(ds / dh);
        }
    }
    assert!(rows.iter().any(|r| &r[5] == "true"));
    assert!(ratios.len() >= 2);
    assert!(ratios.windows(2).all(|w| w[1] >= w[0]), "{ratios:?}");
}

#[test]
fn validate_passes_on_both_instances() {
    for instance in ["lossless-m4", "lossy-m3"] {
        let out = gbs_tn(&["validate", "--instance", instance, "--seed", "3"]);
        assert!(out.status.success(), "{instance}: {}", String::from_utf8_lossy(&out.stderr));
        let report = &json_lines(&out)[0];
        assert_eq!(report["passed"], Value::Bool(true));
        assert!(report["max_deviation"].as_f64().unwrap() <= 1e-8);
        assert_eq!(report["bond_bound_violations"].as_u64(), Some(0));
    }
}
