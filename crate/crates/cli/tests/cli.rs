//! End-to-end tests of the `ksc` binary: exit-code contract, output layout,
//! determinism, and the sweep/study cross-check.

use std::path::Path;
use std::process::{Command, Output};

fn ksc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const HOMOGENEOUS: &str = r#"
eps = 0.0

[grid]
cells = [16]
lengths = [1.0]

[params]
a = 1.0
b = 1.0
gamma = 2.0

[params.motility]
family = "power"
alpha = 1.0

[initial.u]
kind = "constant"
value = 1.0

[initial.v]
kind = "constant"
value = 1.0

[solver]
t_end = 1.0
record_dt = 0.05

[output]
dir = "out_homogeneous"
"#;

#[test]
fn homogeneous_run_exits_zero_with_flat_lyapunov() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", HOMOGENEOUS);
    let out = ksc(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let records = std::fs::read_to_string(tmp.path().join("out_homogeneous/records.csv")).unwrap();
    let mut lines = records.lines();
    assert_eq!(lines.next().unwrap(), "# ksc records v1");
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let lyap_col = header.iter().position(|&c| c == "lyapunov").unwrap();
    for line in lines {
        let v: f64 = line.split(',').nth(lyap_col).unwrap().parse().unwrap();
        assert!(v.abs() <= 1e-12, "lyapunov {v}");
    }
    for artifact in [
        "config.toml",
        "monitor_report.json",
        "threshold_report.json",
    ] {
        assert!(tmp.path().join("out_homogeneous").join(artifact).exists());
    }
}

#[test]
fn rerun_reproduces_records_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let noisy = HOMOGENEOUS
        .replace(
            "[initial.u]\nkind = \"constant\"\nvalue = 1.0",
            "[initial.u]\nkind = \"random\"\nlo = 0.5\nhi = 1.5\nseed = 7",
        )
        .replace("t_end = 1.0", "t_end = 0.1")
        .replace("eps = 0.0", "eps = 1e-2");
    let cfg = write(tmp.path(), "run.toml", &noisy);
    assert_eq!(
        ksc(&["run", cfg.to_str().unwrap(), "--out", "a"], tmp.path())
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        ksc(&["run", cfg.to_str().unwrap(), "--out", "b"], tmp.path())
            .status
            .code(),
        Some(0)
    );
    let a = std::fs::read(tmp.path().join("a/records.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/records.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn nonpositive_initial_data_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = HOMOGENEOUS.replace("value = 1.0", "value = 0.0");
    let cfg = write(tmp.path(), "bad.toml", &bad);
    let out = ksc(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("strictly positive"), "{stderr}");
}

#[test]
fn malformed_config_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = HOMOGENEOUS.replace("gamma = 2.0", "gamma = \"two\"");
    let cfg = write(tmp.path(), "bad.toml", &bad);
    let out = ksc(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn unusable_output_dir_fails_before_compute() {
    let tmp = tempfile::tempdir().unwrap();
    // a regular file where a directory must go
    write(tmp.path(), "blocker", "not a directory");
    let cfg = write(
        tmp.path(),
        "run.toml",
        &HOMOGENEOUS.replace("out_homogeneous", "blocker/sub"),
    );
    let start = std::time::Instant::now();
    let out = ksc(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(
        start.elapsed().as_secs() < 5,
        "must fail before any computation"
    );
}

#[test]
fn blow_up_exits_three_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    // enormous growth with negligible degradation trips the guard
    let cfg = write(
        tmp.path(),
        "run.toml",
        &HOMOGENEOUS
            .replace("\na = 1.0", "\na = 100.0")
            .replace("\nb = 1.0", "\nb = 1e-12")
            .replace("eps = 0.0", "eps = 1e-2") // keep the signal side regular while u runs away
            .replace(
                "[solver]\nt_end = 1.0",
                "[solver]\nt_end = 1.0\nblowup_guard = 1e6",
            ),
    );
    let out = ksc(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("out_homogeneous/blowup_report.json")).unwrap(),
    )
    .unwrap();
    assert!(report["linf_u"].as_f64().unwrap() > 1e6);
    assert!(report["note"].as_str().unwrap().contains("halved"));
    // partial records exist
    assert!(tmp.path().join("out_homogeneous/records.csv").exists());
}

const SWEEP_BASE: &str = r#"
[base]
eps = 1e-2

[base.grid]
cells = [32]
lengths = [1.0]

[base.params]
a = 1.0
b = 1.0
gamma = 2.0

[base.params.motility]
family = "power"
alpha = 1.0

[base.initial.u]
kind = "random"
lo = 0.5
hi = 1.5
seed = 11

[base.initial.v]
kind = "cosine"
base = 1.0
amplitude = 0.2
modes = [1]

[base.solver]
t_end = 0.1
record_dt = 0.02
"#;

#[test]
fn sweep_runs_full_cross_product_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = format!(
        "{SWEEP_BASE}\n[sweep]\nb = [0.5, 1.0, 2.0]\nalpha = [1.0, 1.5, 2.0]\n\n[output]\ndir = \"sweep_a\"\n"
    );
    let cfg = write(tmp.path(), "sweep.toml", &sweep);
    let out = ksc(&["sweep", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = std::fs::read_to_string(tmp.path().join("sweep_a/sweep_summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 9, "3x3 cross product");
    assert!(rows.iter().all(|r| r.contains(",ok,")));

    // deterministic: a second sweep produces byte-identical summaries
    let sweep_b = sweep.replace("sweep_a", "sweep_b");
    let cfg_b = write(tmp.path(), "sweep_b.toml", &sweep_b);
    assert_eq!(
        ksc(&["sweep", cfg_b.to_str().unwrap()], tmp.path())
            .status
            .code(),
        Some(0)
    );
    let summary_b = std::fs::read_to_string(tmp.path().join("sweep_b/sweep_summary.csv")).unwrap();
    assert_eq!(summary, summary_b);
}

#[test]
fn stiff_sweep_point_is_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = format!(
        "{}\n[sweep]\ncells = [32, 256]\n\n[output]\ndir = \"sweep\"\n",
        SWEEP_BASE.replace(
            "[base.solver]\nt_end = 0.1",
            "[base.solver]\nt_end = 0.1\ndt_min = 1e-5"
        )
    );
    let cfg = write(tmp.path(), "sweep.toml", &sweep);
    let out = ksc(&["sweep", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = std::fs::read_to_string(tmp.path().join("sweep/sweep_summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(
        rows[0].contains(",ok,"),
        "coarse point unaffected: {}",
        rows[0]
    );
    assert!(
        rows[1].contains(",stiffness,"),
        "fine point stiff: {}",
        rows[1]
    );
}

/// The sweep path and the study path must agree: distances recomputed from
/// the sweep's snapshot files match `eps_convergence_study` on the same
/// problem.
#[test]
fn sweep_over_eps_matches_the_study() {
    let tmp = tempfile::tempdir().unwrap();
    let base = SWEEP_BASE
        .replace(
            "kind = \"random\"\nlo = 0.5\nhi = 1.5\nseed = 11",
            "kind = \"cosine\"\nbase = 1.0\namplitude = 0.3\nmodes = [1]",
        )
        .replace("t_end = 0.1", "t_end = 0.2\nsnapshots = true")
        .replace("alpha = 1.0", "alpha = 2.0");
    let ladder = [1e-1, 1e-2, 1e-3];
    let sweep = format!("{base}\n[sweep]\neps = [1e-1, 1e-2, 1e-3]\n\n[output]\ndir = \"sweep\"\n");
    let cfg = write(tmp.path(), "sweep.toml", &sweep);
    let out = ksc(&["sweep", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // distances from the snapshot files, trapezoid in time
    let load = |point: usize| -> Vec<(f64, Vec<f64>)> {
        let dir = tmp.path().join(format!("sweep/point_{point:04}/snapshots"));
        let mut snaps = Vec::new();
        for k in 0.. {
            let path = dir.join(format!("u_{k:05}.csv"));
            if !path.exists() {
                break;
            }
            let file = std::fs::File::open(path).unwrap();
            let mut reader = std::io::BufReader::new(file);
            let (field, t) = ksc_core::grid::Field::<f64>::read_csv(&mut reader).unwrap();
            snaps.push((t.unwrap(), field.values().to_vec()));
        }
        snaps
    };
    let mut file_distances = Vec::new();
    for pair in [(0usize, 1usize), (1, 2)] {
        let a = load(pair.0);
        let b = load(pair.1);
        assert_eq!(a.len(), b.len());
        let h = 1.0 / 32.0;
        let mut total = 0.0;
        for k in 0..a.len() {
            let sq: f64 = a[k]
                .1
                .iter()
                .zip(&b[k].1)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                * h;
            let w = if k == 0 || k + 1 == a.len() {
                0.01
            } else {
                0.02
            };
            total += sq * w;
        }
        file_distances.push(total.sqrt());
    }

    // the study on the same problem
    let run_cfg = base.replace("[base.", "[").replace("[base]\n", "");
    let parsed = ksc_cli::config::parse_run_config(&run_cfg).unwrap();
    let built = parsed.build().unwrap();
    let problem = ksc_core::analysis::ProblemSpec {
        grid: built.grid.clone(),
        params: built.params.clone(),
        u0: built.u0.clone(),
        v0: built.v0.clone(),
        solver: built.solver.clone(),
        diagnostics: built.diagnostics.clone(),
    };
    let study = ksc_core::analysis::eps_convergence_study(&problem, &ladder).unwrap();
    for (a, b) in file_distances.iter().zip(&study.distances) {
        assert!(
            (a - b).abs() <= 1e-12 * (1.0 + b.abs()),
            "file {a} vs study {b}"
        );
    }
}

#[test]
fn verify_single_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ksc(&["verify", "--only", "1"], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("C01"));
}

#[test]
fn constants_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ksc(
        &["constants", "--n", "2,4", "--alpha", "1.0", "--json"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["vacuous"].as_bool().unwrap());
    let thr = rows[1]["b_threshold"].as_f64().unwrap();
    assert!((thr - 4370890.575212726).abs() < 1e-4);
}

#[test]
fn hypotheses_command_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", HOMOGENEOUS);
    let out = ksc(&["hypotheses", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("phi-over-s-alpha-floor"));

    // inconsistent custom triple: consistency failure -> exit 1
    let bad = HOMOGENEOUS.replace(
        "family = \"power\"\nalpha = 1.0",
        "family = \"custom\"\nalpha = 1.0\nphi = \"s*(1+s)\"\ndphi = \"1+2*s\"\nd2phi = \"2.5\"",
    );
    let cfg = write(tmp.path(), "bad.toml", &bad);
    let out = ksc(&["hypotheses", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn quadratic_degradation_long_run_passes_mass_floor() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_text = HOMOGENEOUS
        .replace("alpha = 1.0", "alpha = 2.0")
        .replace("eps = 0.0", "eps = 1e-3")
        .replace("cells = [16]", "cells = [64]")
        .replace(
            "[initial.v]\nkind = \"constant\"\nvalue = 1.0",
            "[initial.v]\nkind = \"cosine\"\nbase = 1.0\namplitude = 0.2\nmodes = [1]",
        )
        .replace(
            "[initial.u]\nkind = \"constant\"\nvalue = 1.0",
            "[initial.u]\nkind = \"cosine\"\nbase = 1.0\namplitude = 0.2\nmodes = [1]",
        )
        .replace("t_end = 1.0", "t_end = 20.0");
    let cfg = write(tmp.path(), "run.toml", &cfg_text);
    let out = ksc(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("out_homogeneous/monitor_report.json")).unwrap(),
    )
    .unwrap();
    let entries = report["entries"].as_array().unwrap();
    let m5 = entries
        .iter()
        .find(|e| e["id"] == "M5-mass-lower")
        .expect("gamma = 2 with alpha > 1 enables the mass floor monitor");
    assert_eq!(m5["passed"], true, "{m5}");
    // the informational decay-threshold entry reports a crossing on this run
    let e1 = entries
        .iter()
        .find(|e| e["id"] == "E1-eventual-decay-threshold")
        .unwrap();
    assert!(e1["first_violation_t"].as_f64().is_some(), "{e1}");
}
