//! End-to-end tests of the `qem` binary: report values, determinism, exit
//! codes and the config-file/flag precedence.

use std::path::PathBuf;
use std::process::{Command, Output};

fn qem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qem"))
        .args(args)
        .env_remove("QEM_SEED")
        .output()
        .expect("binary runs")
}

fn qem_env(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qem"));
    cmd.args(args).env_remove("QEM_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("qem-cli-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn bound_dephasing_example() {
    let out = qem(&["bound", "--noise", "dephasing:0.1", "--shape", "1,1,1", "--bias", "0"]);
    let v = stdout_json(&out);
    let bound = v["report"]["bound_value"].as_f64().unwrap();
    assert!((bound - 1.25).abs() < 1e-9);
    assert_eq!(v["report"]["relaxation"], "exact_K1");
    assert_eq!(v["report"]["pair_description"], "plus/minus");
    // The report embeds the resolved configuration.
    assert_eq!(v["config"]["noise"], "dephasing:0.1");
}

#[test]
fn bound_with_accuracy_reports_min_rounds() {
    let out = qem(&[
        "bound", "--noise", "dephasing:0.1", "--shape", "1,1,1", "--bias", "0", "--delta",
        "0.05", "--fail", "0.05",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["min_rounds"].as_u64().unwrap(), 4612);
}

#[test]
fn layered_example_matches_closed_form() {
    let out = qem(&[
        "layered", "--n", "2", "--L", "6", "--eps", "0.1", "--shape", "1,1", "--bias", "0",
    ]);
    let v = stdout_json(&out);
    let bound = v["report"]["bound_value"].as_f64().unwrap();
    let expected = 1.0 / ((2.0 * std::f64::consts::LN_2).sqrt() * 2.0_f64.sqrt()) * (1.0 / 0.9_f64).powi(3);
    assert!((bound - expected).abs() < 1e-9, "bound {bound} vs {expected}");
}

#[test]
fn pec_example_mean_and_rounds() {
    let out = qem(&[
        "pec", "--noise", "dephasing:0.1", "--obs", "X/2", "--state", "plus", "--rounds",
        "100000", "--seed", "1", "--delta", "0.05", "--fail", "0.05",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["min_rounds_required"].as_u64().unwrap(), 4612);
    let mean = v["mean"].as_f64().unwrap();
    assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    assert!((v["gamma"].as_f64().unwrap() - 1.25).abs() < 1e-9);
    assert!((v["truth"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!((v["spread_declared"].as_f64().unwrap() - 1.25).abs() < 1e-9);
}

#[test]
fn reports_are_byte_identical_for_equal_config() {
    let p1 = tmp_path("det1.json");
    let p2 = tmp_path("det2.json");
    for p in [&p1, &p2] {
        let out = qem(&[
            "pec", "--noise", "dephasing:0.1", "--obs", "X/2", "--state", "plus", "--rounds",
            "2000", "--seed", "7", "--out", p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read(&p1).unwrap();
    let b = std::fs::read(&p2).unwrap();
    assert_eq!(a, b);
    std::fs::remove_file(&p1).ok();
    std::fs::remove_file(&p2).ok();
}

#[test]
fn env_seed_is_used_when_flag_absent() {
    let with_env = qem_env(
        &["bound", "--noise", "dephasing:0.1", "--shape", "1,1,1", "--search", "random:5"],
        &[("QEM_SEED", "99")],
    );
    let with_flag = qem(&[
        "bound", "--noise", "dephasing:0.1", "--shape", "1,1,1", "--search", "random:5",
        "--seed", "99",
    ]);
    assert_eq!(stdout_json(&with_env), stdout_json(&with_flag));
}

#[test]
fn sweep_layered_has_constant_ratio() {
    let out = qem(&[
        "sweep", "--target", "layered", "--param", "L", "--grid", "1:10", "--n", "1", "--eps",
        "0.1", "--shape", "1,1",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("param,value,bound_value"));
    let bounds: Vec<f64> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(bounds.len(), 10);
    let expected = (1.0f64 / 0.9).sqrt();
    for pair in bounds.windows(2) {
        let ratio = pair[1] / pair[0];
        assert!((ratio - expected).abs() < 1e-9, "ratio {ratio}");
    }
}

#[test]
fn sweep_dephasing_bound_curve() {
    let out = qem(&[
        "sweep", "--target", "bound", "--param", "eps", "--grid", "0.05,0.1,0.2", "--noise",
        "dephasing:0", "--shape", "1,1,1",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (row, eps) in rows.iter().zip([0.05f64, 0.1, 0.2]) {
        let bound: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!((bound - 1.0 / (1.0 - 2.0 * eps)).abs() < 1e-9);
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let cfg_path = tmp_path("config.json");
    std::fs::write(
        &cfg_path,
        r#"{"noise": "dephasing:0.1", "shape": "1,1,1", "bias": 0.0}"#,
    )
    .unwrap();
    let from_file = qem(&["bound", "--config", cfg_path.to_str().unwrap()]);
    let v = stdout_json(&from_file);
    assert!((v["report"]["bound_value"].as_f64().unwrap() - 1.25).abs() < 1e-9);

    // An explicit flag wins over the file value.
    let overridden = qem(&[
        "bound", "--config", cfg_path.to_str().unwrap(), "--noise", "dephasing:0.2",
    ]);
    let v = stdout_json(&overridden);
    assert!((v["report"]["bound_value"].as_f64().unwrap() - 1.0 / 0.6).abs() < 1e-9);
    std::fs::remove_file(&cfg_path).ok();
}

#[test]
fn validation_errors_exit_2() {
    let bad_rate = qem(&["bound", "--noise", "dephasing:1.5", "--shape", "1,1,1"]);
    assert_eq!(bad_rate.status.code(), Some(2));

    let bad_param = qem(&[
        "sweep", "--target", "layered", "--param", "bogus", "--grid", "1:3", "--n", "1",
        "--eps", "0.1", "--shape", "1,1", "--L", "2",
    ]);
    assert_eq!(bad_param.status.code(), Some(2));

    let empty_grid = qem(&[
        "sweep", "--target", "layered", "--param", "L", "--grid", "5:1", "--n", "1", "--eps",
        "0.1", "--shape", "1,1",
    ]);
    assert_eq!(empty_grid.status.code(), Some(2));

    let csv_on_single = qem(&[
        "bound", "--noise", "dephasing:0.1", "--shape", "1,1,1", "--format", "csv",
    ]);
    assert_eq!(csv_on_single.status.code(), Some(2));
}

#[test]
fn subfid_reports_bounds_in_order() {
    let out = qem(&[
        "subfid", "--noise", "depolarizing:0.15", "--pair", "plus,minus", "--shots", "20000",
        "--seed", "11",
    ]);
    let v = stdout_json(&out);
    let est_bound = v["bound_from_estimate"].as_f64().unwrap();
    let fid_bound = v["bound_from_exact_fidelity"].as_f64().unwrap();
    let ci = v["bound_ci"].as_f64().unwrap();
    assert!(est_bound <= fid_bound + 3.0 * ci);
    assert!(v["estimate"]["shots"]["overlap"].as_u64().unwrap() == 20000);
}

#[test]
fn vd_report_fields() {
    let out = qem(&[
        "vd", "--lambda", "0.8", "--copies", "2", "--obs", "Z/2", "--rounds", "5000", "--seed",
        "2",
    ]);
    let v = stdout_json(&out);
    assert!((v["bias_bound"].as_f64().unwrap() - 0.03125).abs() < 1e-9);
    assert!((v["spread_declared"].as_f64().unwrap() - 1.5625).abs() < 1e-9);
    let exact = v["exact_estimator_mean"].as_f64().unwrap();
    assert!((exact - 0.46875).abs() < 1e-9);
}
