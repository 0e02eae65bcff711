//! End-to-end tests of the `qrc` binary: exit codes, output files, schema
//! fields and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn qrc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qrc"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = qrc()
        .args(args)
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "qrc {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn oracle_passes_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&["oracle", "--seed", "5"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS"), "oracle output: {text}");

    let outcome = read_json(&dir.path().join("oracle.json"));
    assert_eq!(outcome["schema"], "oracle-outcome/1");
    assert!(outcome["pass"].as_bool().unwrap());
    let total = outcome["total"].as_f64().unwrap();
    assert!((total - 1.0).abs() <= 0.005, "oracle total {total}");

    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["schema"], "run-manifest/1");
    assert_eq!(manifest["subcommand"], "oracle");
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["config"]["reservoir"]["n_qubits"], 1);
    assert!(manifest["config_hash"].as_str().unwrap().len() == 64);
    assert!(dir.path().join("records.csv").exists());
}

#[test]
fn unknown_subcommand_exits_nonzero_with_usage() {
    let out = qrc().arg("frobnicate").output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.to_lowercase().contains("usage"),
        "expected usage text, got: {stderr}"
    );
}

#[test]
fn invalid_dt_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrc()
        .args(["ipc", "--dt", "-1", "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("dt"), "error should name dt: {stderr}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[reservoir]\nnn_qubits = 5\n").unwrap();
    let out = qrc()
        .args(["ipc", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("nn_qubits") || stderr.contains("unknown field"),
        "error should flag the unknown key: {stderr}"
    );
}

#[test]
fn ipc_run_writes_report_and_is_deterministic() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let args = [
        "ipc",
        "--preset",
        "desk",
        "--n-qubits",
        "3",
        "--length",
        "4000",
        "--washout",
        "400",
        "--dmax",
        "3",
        "--seed",
        "11",
        "--observables",
        "x+z",
    ];
    run_ok(&args, dir_a.path());
    run_ok(&args, dir_b.path());

    for file in ["report.json", "records.csv", "manifest.json"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let mut b = std::fs::read(dir_b.path().join(file)).unwrap();
        // The manifests differ only in the out_dir they record.
        if file == "manifest.json" {
            let sa = String::from_utf8(a.clone()).unwrap();
            let sb = String::from_utf8(b).unwrap();
            b = sb
                .replace(
                    dir_b.path().to_str().unwrap(),
                    dir_a.path().to_str().unwrap(),
                )
                .into_bytes();
            assert_eq!(sa, String::from_utf8(b.clone()).unwrap());
            continue;
        }
        assert_eq!(a, b, "{file} differs between identical runs");
    }

    let report = read_json(&dir_a.path().join("report.json"));
    assert_eq!(report["schema"], "capacity-report/1");
    assert_eq!(report["n_vars"], 6);
    assert_eq!(report["rows"], 4000);
    assert_eq!(report["washout"], 400);
    assert_eq!(report["config"]["observables"], "x+z");
    assert!(report["normalized_total"].as_f64().unwrap() <= 1.02);

    let records = std::fs::read_to_string(dir_a.path().join("records.csv")).unwrap();
    let mut lines = records.lines();
    assert_eq!(
        lines.next().unwrap(),
        "degree,delays,term_degrees,capacity,above_threshold"
    );
    assert!(records.lines().count() > 10);
    assert!(!records.contains('\r'));
}

#[test]
fn ipc_can_dump_the_design_matrix() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "ipc",
            "--dump-design",
            "--n-qubits",
            "2",
            "--length",
            "500",
            "--washout",
            "160",
            "--dmax",
            "2",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    let design = std::fs::read_to_string(dir.path().join("design.csv")).unwrap();
    let mut lines = design.lines();
    assert_eq!(lines.next().unwrap(), "z_1_v1,z_2_v1,bias");
    assert_eq!(design.lines().count(), 501);
    for line in design.lines().skip(1) {
        assert!(line.ends_with(",1"), "bias column must be 1: {line}");
    }
}

#[test]
fn sweep_runs_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        r#"
seed = 9
[reservoir]
n_qubits = 2
[run]
length = 1200
washout = 200
realizations = 2
[ipc]
d_max = 2
max_delays = [20, 8]
n_surrogates = 3
[sweep]
axis = "dt"
values = [1.0, 10.0]
"#,
    )
    .unwrap();
    let out = run_ok(&["sweep", "--config", config.to_str().unwrap()], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("sweep dt=1"), "stdout: {text}");

    let dataset = read_json(&dir.path().join("sweep.json"));
    assert_eq!(dataset["schema"], "sweep-dataset/1");
    assert_eq!(dataset["axis"], "dt");
    assert_eq!(dataset["points"].as_array().unwrap().len(), 2);
    for point in dataset["points"].as_array().unwrap() {
        assert!(point["error"].is_null());
        assert_eq!(point["configs"].as_array().unwrap().len(), 2);
    }

    let totals = std::fs::read_to_string(dir.path().join("sweep_totals.csv")).unwrap();
    assert!(totals.starts_with(
        "axis,value,realizations,n_vars,total_mean,total_std,normalized_mean,normalized_std,error"
    ));
    assert_eq!(totals.lines().count(), 3);
    assert!(dir.path().join("sweep_points.csv").exists());
}

#[test]
fn sweep_without_config_section_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrc()
        .args(["sweep", "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("[sweep]"), "stderr: {stderr}");
    // The manifest records the failure.
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["status"], "incomplete");
}

#[test]
fn converge_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("conv.toml");
    std::fs::write(
        &config,
        "[convergence]\ndt_values = [4.0, 10.0]\nn_inputs = 120\n",
    )
    .unwrap();
    run_ok(
        &["converge", "--config", config.to_str().unwrap(), "--seed", "2"],
        dir.path(),
    );
    let dataset = read_json(&dir.path().join("convergence.json"));
    assert_eq!(dataset["schema"], "convergence-dataset/1");
    assert_eq!(dataset["curves"].as_array().unwrap().len(), 2);

    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(csv.starts_with("dt,input_index,time,distance"));
    assert_eq!(csv.lines().count(), 1 + 2 * 120);
    // The driven network forgets its initial state.
    let last = csv.lines().last().unwrap();
    let distance: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!(distance < 1e-4, "final distance {distance}");
}

#[test]
fn memory_curve_outputs_delay_profile() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "memory-curve",
            "--n-qubits",
            "2",
            "--length",
            "3000",
            "--washout",
            "300",
            "--dmax",
            "2",
            "--seed",
            "4",
        ],
        dir.path(),
    );
    let csv = std::fs::read_to_string(dir.path().join("memory_curve.csv")).unwrap();
    assert!(csv.starts_with("delay,capacity,above_threshold"));
    // Base degree-1 window plus header.
    assert!(csv.lines().count() >= 152);
    let outcome = read_json(&dir.path().join("memory_curve.json"));
    assert_eq!(outcome["schema"], "memory-curve/1");
    assert_eq!(outcome["curve"][0]["delay"], 0);
}

#[test]
fn env_var_sets_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrc()
        .args(["oracle", "--seed", "5", "--dmax", "2"])
        .env("QRC_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("oracle.json").exists());
}
