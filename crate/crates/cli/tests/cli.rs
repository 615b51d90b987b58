use std::path::Path;
use std::process::{Command, Output};

fn tfris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfris"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tfris(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn qsweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = |out: &Path| {
        vec![
            "qsweep", "--rows", "2", "--cols", "2", "--Q", "2,3", "--harmonics", "3",
            "--mc-aware", "--cascaded", "--restarts", "3", "--benchmark-samples", "10",
            "--seed", "4", "--out",
        ]
        .into_iter()
        .map(String::from)
        .chain([s(out).to_string()])
        .collect::<Vec<_>>()
    };
    for out in [&a, &b] {
        let v = args(out);
        ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let ca = std::fs::read(a.join("qsweep.csv")).unwrap();
    assert_eq!(ca, std::fs::read(b.join("qsweep.csv")).unwrap());

    let mut reader = csv::Reader::from_path(a.join("qsweep.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "model_fidelity"));
    assert!(headers.iter().any(|h| h == "benchmark_gain_db"));
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    for r in &rows {
        let evaluated: f64 = r[col("evaluated_gain_db")].parse().unwrap();
        let benchmark: f64 = r[col("benchmark_gain_db")].parse().unwrap();
        assert!(evaluated >= benchmark);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("qsweep_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 4);
    assert!(manifest["scenario_fingerprint"].as_str().unwrap().len() == 64);
    assert!(manifest["metadata"]["benchmark_convention"].is_string());
}

#[test]
fn generated_scenario_feeds_studies() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scenario.json");
    let info = ok(&[
        "gen-scenario", "--rows", "2", "--cols", "2", "--null-angle", "250", "--max-order", "3",
        "--out", s(&file),
    ]);
    let info: serde_json::Value = serde_json::from_str(&info).unwrap();
    assert!(info["reciprocity_error"].as_f64().unwrap() <= 1e-12);
    assert!(info["max_singular_value"].as_f64().unwrap() <= 1.0 + 1e-9);

    let out = dir.path().join("bn");
    ok(&[
        "beamnull", "--scenario", s(&file), "--Q", "3", "--opt-harmonics", "5", "--eval-harmonics", "7",
        "--restarts", "3", "--out", s(&out),
    ]);
    assert!(out.join("beamnull.csv").exists());
    assert!(out.join("beamnull_angular.csv").exists());

    let opt = dir.path().join("opt");
    let text = ok(&[
        "optimize", "--scenario", s(&file), "--Q", "3", "--harmonics", "5", "--restarts", "3",
        "--out", s(&opt),
    ]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["config"].as_array().unwrap().len(), 4);
    assert!(opt.join("optimize.json").exists());
}

#[test]
fn truncation_small_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "truncation", "--rows", "2", "--cols", "1", "--tx-angle", "40", "--Q", "2,3",
        "--harmonics", "3,5", "--ground-truth", "7", "--n-random", "4", "--angle-step", "90",
        "--out", s(dir.path()),
    ]);
    let text = std::fs::read_to_string(dir.path().join("truncation.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 4);
}

#[test]
fn ingest_round_trip() {
    use tfris::scenario::{DataFormat, NetworkData};
    let dir = tempfile::tempdir().unwrap();
    let g = tfris::scenario::ScenarioGeometry::default();
    let mut g2 = g.clone();
    g2.rows = 1;
    g2.cols = 2;
    let z = tfris::scenario::impedance_matrix(&g2.positions(), g2.carrier_hz, &Default::default()).unwrap();
    let sm = tfris::scenario::impedance_to_scattering(&z).unwrap();
    let data = NetworkData {
        ports: 4,
        frequencies_hz: vec![2.39e9, 2.41e9],
        matrices: vec![sm.clone(), sm],
    };
    let file = dir.path().join("net.s4p");
    std::fs::write(&file, data.to_touchstone(DataFormat::Db)).unwrap();
    let out = dir.path().join("ingested.json");
    let text = ok(&["ingest", s(&file), "--n-rx", "1", "--n-ris", "2", "--out", s(&out)]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["passive"], true);
    let b = tfris::scenario::load_scenario(&out).unwrap();
    assert_eq!(b.harmonics().len(), 7);
}

#[test]
fn errors_are_structured() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.s3p");
    std::fs::write(&bad, "# GHz S RI\n1 0.1 0 0.2\n").unwrap();
    let target = dir.path().join("x.json");
    let out = tfris(&["ingest", s(&bad), "--n-rx", "1", "--n-ris", "1", "--out", s(&target)]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse");
    assert!(err["message"].as_str().unwrap().contains("line 2"));
    assert!(!target.exists());

    let out = tfris(&["qsweep", "--harmonics", "4", "--out", s(dir.path())]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "invalid_study");

    let missing = dir.path().join("missing.json");
    let out = tfris(&["qsweep", "--scenario", s(&missing), "--out", s(dir.path())]);
    assert!(!out.status.success());
    assert!(tfris(&["frobnicate"]).status.code() == Some(2));
}
