use std::fs;
use std::process::{Command, Output};

fn dpflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpflow")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn calibrate_prints_default_hyperparameters() {
    let out = dpflow(&["calibrate", "--n", "2000", "--d", "100", "--p", "40000", "--eps", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let tau = v["tau"].as_f64().unwrap();
    let c = v["c_clip"].as_f64().unwrap();
    assert!((tau - 0.1444342954986822).abs() <= 1e-14 * tau);
    assert!((c - 11554.743639894575).abs() <= 1e-13 * c);
    assert_eq!(v["delta"].as_f64().unwrap(), 1.0 / 2000.0);
    let sigma = v["sigma"].as_f64().unwrap();
    let big = v["Sigma"].as_f64().unwrap();
    assert!((big - 2.0 * c * sigma / 2000.0).abs() <= 1e-12 * big);
}

#[test]
fn out_of_range_budget_exits_with_config_code() {
    let out = dpflow(&["calibrate", "--eps", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn malformed_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"n": 100, "unknown_key": 1}"#).unwrap();
    let out = dpflow(&["sweep_T", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_task_is_a_usage_error() {
    let out = dpflow(&["sweep_q"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_sweep_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = dpflow(&[
        "sweep_T",
        "--n",
        "30",
        "--d",
        "5",
        "--p",
        "40,80",
        "--T",
        "0,3,9",
        "--seeds",
        "2",
        "--test-count",
        "200",
        "--workers",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["task"], "sweep_T");
    assert_eq!(v["rows"], 12);
    assert_eq!(v["diverged"], 0);
    let files: Vec<String> = v["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap().to_string())
        .collect();
    assert_eq!(files.len(), 4);
    let table = fs::read_to_string(out_dir.join("sweep_T.csv")).unwrap();
    assert_eq!(table.lines().count(), 13);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("sweep_T_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["p_list"], serde_json::json!([40, 80]));
    assert!(files.iter().any(|f| f.ends_with(".svg")));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out_dir = dir.path().join("res");
    fs::write(
        &cfg,
        format!(
            r#"{{"n": 30, "d": 5, "p_list": [40], "T_list": [2], "seeds": [0, 1, 2], "test_count": 150, "output_dir": "{}"}}"#,
            out_dir.display()
        ),
    )
    .unwrap();
    let out = dpflow(&[
        "sweep_T",
        "--config",
        cfg.to_str().unwrap(),
        "--seeds",
        "1",
        "--T",
        "1,4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["rows"], 2);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("sweep_T_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["n"], 30);
    assert_eq!(meta["config"]["seeds"], serde_json::json!([0]));
}

#[test]
fn divergence_can_be_made_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"n": 30, "d": 5, "p_list": [40], "T_list": [40], "seeds": [0], "test_count": 150,
            "eta": 1000.0, "force_sigma_zero": true, "disable_clipping": true}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("o");
    let base = [
        "sweep_T",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ];
    let flagged = dpflow(&base);
    assert!(flagged.status.success());
    assert_eq!(json(&flagged)["diverged"], 1);
    let mut args = base.to_vec();
    args.push("--fail-on-divergence");
    assert_eq!(dpflow(&args).status.code(), Some(3));
}
