use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trialspace"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("scenario.json");
    fs::write(
        &path,
        r#"{"population": {"blocks": [
            {"count": 4, "attrs": {"a": 1, "b": 0}, "tau": 0.9, "nu": 0.2},
            {"count": 6, "attrs": {"a": 0, "b": 1}, "tau": 0.5, "nu": 0.5}
        ]}, "trial": {"s": 8, "t": 3}}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn rct_writes_one_row_per_participant() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--config",
        &config,
        "--seed",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
        "simulate",
        "rct",
        "--reps",
        "2",
    ]);
    assert!(out.status.success());
    for r in 0..2 {
        let text = fs::read_to_string(out_dir.join(format!("trial_{r:04}.csv"))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,individual,treated,response,a,b");
        assert_eq!(lines.len(), 8 + 1);
        let treated = lines[1..]
            .iter()
            .filter(|l| l.split(',').nth(2) == Some("1"))
            .count();
        assert_eq!(treated, 3);
    }
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["reps"], 2);
    assert_eq!(summary["n"], 10);
    let true_effect = summary["true_effect"].as_f64().unwrap();
    assert!((true_effect - (0.66 - 0.38)).abs() < 1e-12);
}

#[test]
fn observational_sample_has_s_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_dir = dir.path().join("obs");
    let out = run(&[
        "--config",
        &config,
        "--seed",
        "4",
        "--out",
        out_dir.to_str().unwrap(),
        "simulate",
        "obs",
        "--s",
        "25",
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(out_dir.join("sample.csv")).unwrap();
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn different_seeds_give_different_trials() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let a = run(&[
        "--config", &config, "--seed", "1", "simulate", "rct", "--reps", "5",
    ]);
    let b = run(&[
        "--config", &config, "--seed", "2", "simulate", "rct", "--reps", "5",
    ]);
    assert_ne!(json(&a)["rho1"], json(&b)["rho1"]);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    // t must be strictly below s.
    let out = run(&[
        "--config", &config, "--seed", "1", "simulate", "rct", "--t", "8",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Simulation without a seed.
    let out = run(&["--config", &config, "simulate", "rct"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["builtin", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["exact", "hypergeom", "--n", "3", "--K", "4", "--t", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreadable_input_exits_3() {
    let out = run(&[
        "--config",
        "/nonexistent/scenario.json",
        "--seed",
        "1",
        "simulate",
        "rct",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["dag", "joint", "--model", "/nonexistent/model.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oversized_enumeration_exits_4() {
    let out = run(&[
        "exact",
        "verify-independence",
        "--n",
        "30",
        "--s",
        "10",
        "--t",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn c0_size_skips_enumeration_over_cap() {
    let v = json(&run(&[
        "exact", "c0-size", "--n", "6", "--s", "4", "--t", "2", "--cap", "10",
    ]));
    assert_eq!(v["c0_size"], "2160");
    assert!(v["enumerated"].is_null());
}

#[test]
fn verify_independence_holds() {
    let v = json(&run(&[
        "exact",
        "verify-independence",
        "--n",
        "4",
        "--s",
        "3",
        "--t",
        "2",
    ]));
    assert_eq!(v["holds"], true);
    let v = json(&run(&[
        "exact",
        "verify-independence",
        "--n",
        "5",
        "--s",
        "3",
        "--t",
        "1",
        "--attribute",
        "1,0,0,1,1",
    ]));
    assert_eq!(v["holds"], true);
}

#[test]
fn hypergeom_moments() {
    let v = json(&run(&[
        "exact",
        "hypergeom",
        "--n",
        "10",
        "--K",
        "4",
        "--t",
        "5",
    ]));
    assert_eq!(v["mean"].as_f64(), Some(2.0));
    assert!((v["variance"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["pmf_sums_to_one"], true);
    assert_eq!(v["moments_match"], true);
}

#[test]
fn chernoff_and_c0_size() {
    let v = json(&run(&[
        "exact", "chernoff", "--n", "10", "--K", "5", "--t", "4", "--eps", "0.5",
    ]));
    // Pr(|T∩A| > 3) = C(5,4)/C(10,4) = 5/210.
    assert!((v["exact_upper_tail"].as_f64().unwrap() - 5.0 / 210.0).abs() < 1e-15);
    assert_eq!(v["holds"], true);
    let v = json(&run(&[
        "exact", "c0-size", "--n", "3", "--s", "2", "--t", "1",
    ]));
    assert_eq!(v["c0_size"], "12");
}

#[test]
fn dag_joint_and_intervention() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(
        &model,
        r#"{"vertices": [
            {"name": "X", "parents": [], "cpt": [0.3]},
            {"name": "Y", "parents": ["X"], "cpt": [0.2, 0.9]}
        ]}"#,
    )
    .unwrap();
    let model = model.to_str().unwrap();

    let v = json(&run(&["dag", "joint", "--model", model]));
    let p = |v: &Value, key: &str| v["probs"][key].as_f64().unwrap();
    // bit 0 = X, bit 1 = Y
    assert!((p(&v, "0") - 0.7 * 0.8).abs() < 1e-12);
    assert!((p(&v, "1") - 0.3 * 0.1).abs() < 1e-12);
    assert!((p(&v, "2") - 0.7 * 0.2).abs() < 1e-12);
    assert!((p(&v, "3") - 0.3 * 0.9).abs() < 1e-12);

    let v = json(&run(&[
        "dag",
        "intervene",
        "--model",
        model,
        "--set",
        "X=1",
    ]));
    assert_eq!(p(&v, "0"), 0.0);
    assert_eq!(p(&v, "2"), 0.0);
    assert!((p(&v, "3") - 0.9).abs() < 1e-12);

    let out = run(&["dag", "intervene", "--model", model, "--set", "W=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn builtin_appendix_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/appendix.json");
    let out = run(&["--out", path.to_str().unwrap(), "builtin", "appendix"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["x_indep_y"], false);
    assert!((v["do_x1_p_y1"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn tables_analyze_reads_trial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_dir = dir.path().join("out");
    let status = run(&[
        "--config",
        &config,
        "--seed",
        "9",
        "--out",
        out_dir.to_str().unwrap(),
        "simulate",
        "rct",
    ])
    .status;
    assert!(status.success());
    let csv = out_dir.join("trial_0000.csv");
    let v = json(&run(&[
        "tables",
        "analyze",
        "--csv",
        csv.to_str().unwrap(),
        "--top",
        "3",
    ]));
    let pooled = &v["pooled"]["counts"];
    let total: u64 = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| pooled[i][j].as_u64().unwrap())
        .sum();
    assert_eq!(total, 8);
    let treated = pooled[1][0].as_u64().unwrap() + pooled[1][1].as_u64().unwrap();
    assert_eq!(treated, 3);
}

#[test]
fn csv_format_rejected_outside_simulate() {
    let out = run(&[
        "--format", "csv", "exact", "c0-size", "--n", "3", "--s", "2", "--t", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_supplies_seed_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("runs");
    let config = dir.path().join("scenario.json");
    let body = serde_json::json!({
        "population": {"n": 3, "attributes": {"a": [1, 0, 1]},
                       "tau": [0.9, 0.5, 0.2], "nu": [0.1, 0.5, 0.2]},
        "trial": {"s": 3, "t": 1, "reps": 2},
        "seed": 7,
        "output": {"path": out_dir, "format": "csv"}
    });
    fs::write(&config, body.to_string()).unwrap();
    let out = run(&["--config", config.to_str().unwrap(), "simulate", "rct"]);
    assert!(out.status.success());
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 7);
    assert!(out_dir.join("trial_0001.csv").exists());
}
