//! Executes runs and sweeps and lays down their output directories:
//! the echoed config, `records.csv`, `monitor_report.json`,
//! `threshold_report.json`, optional snapshots, and `sweep_summary.csv`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use ksc_core::analysis::classify_regime;
use ksc_core::diagnostics::{monitor_bounds, records_to_csv, MonitorReport};
use ksc_core::dynamics::{run, BlowUpReport, RunStatus, Trajectory};
use ksc_core::{Error, Result};

use crate::config::{BuiltRun, SweepConfigFile, SweepPoint};

#[derive(Debug, Clone, Serialize)]
pub struct BlowUpFile {
    #[serde(flatten)]
    pub report: BlowUpReport,
    /// result of the halved-step retry: a persistent blow-up points outside
    /// the bounded regime, a vanishing one at a step-size artifact
    pub halved_dt_blew_up: Option<bool>,
    pub note: String,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub trajectory: Trajectory<f64>,
    pub monitors: Option<MonitorReport>,
    pub blow_up: Option<BlowUpFile>,
}

/// Probes that the output directory is creatable and writable before any
/// computation starts.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("output dir {}: {e}", dir.display())))?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"ok")
        .map_err(|e| Error::Config(format!("output dir {} not writable: {e}", dir.display())))?;
    let _ = fs::remove_file(&probe);
    Ok(())
}

/// Executes a built run and writes every artifact into `dir` (when given).
/// On blow-up the partial trajectory is still written, together with a
/// blow-up report that includes a halved-step retry diagnosis.
pub fn execute_run(built: &BuiltRun, echo: Option<&str>, dir: Option<&Path>) -> Result<RunOutcome> {
    if let Some(dir) = dir {
        prepare_output_dir(dir)?;
        if let Some(src) = echo {
            fs::write(dir.join("config.toml"), src)?;
        }
    }

    let traj = run(
        built.u0.clone(),
        built.v0.clone(),
        &built.params,
        built.eps,
        &built.solver,
        &built.diagnostics,
    )?;

    let mut blow_up = None;
    let mut monitors = None;
    match &traj.status {
        RunStatus::Completed => {
            monitors = Some(monitor_bounds(
                &traj.records,
                &built.diagnostics,
                &built.params,
                &built.u0,
                &built.v0,
            )?);
        }
        RunStatus::BlowUp(report) => {
            // rerun once at half the step cap to tell a scheme artifact from
            // a genuine departure
            let mut half = built.solver.clone();
            half.dt_max *= 0.5;
            half.snapshots = false;
            let retry = run(
                built.u0.clone(),
                built.v0.clone(),
                &built.params,
                built.eps,
                &half,
                &built.diagnostics,
            );
            let halved = retry.as_ref().ok().map(|t| !t.status.completed());
            let note = match halved {
                Some(true) => "blow-up persists at halved step cap; the trajectory appears to leave the bounded regime".into(),
                Some(false) => "blow-up vanishes at halved step cap; suspect the step size, rerun with smaller dt_max".into(),
                None => format!(
                    "halved-step retry failed: {}",
                    retry.err().map(|e| e.to_string()).unwrap_or_default()
                ),
            };
            blow_up = Some(BlowUpFile {
                report: report.clone(),
                halved_dt_blew_up: halved,
                note,
            });
        }
    }

    if let Some(dir) = dir {
        let mut csv = Vec::new();
        records_to_csv(&traj.records, &built.diagnostics, &mut csv)?;
        fs::write(dir.join("records.csv"), csv)?;

        let threshold = classify_regime(
            &built.params,
            built.analysis_n,
            built.v0.linf_norm(),
            built.lambda_phi,
        )?;
        fs::write(dir.join("threshold_report.json"), threshold.to_json())?;

        if let Some(m) = &monitors {
            fs::write(dir.join("monitor_report.json"), m.to_json())?;
        }
        if let Some(b) = &blow_up {
            fs::write(
                dir.join("blowup_report.json"),
                serde_json::to_string_pretty(b).expect("report serialises"),
            )?;
        }
        if built.solver.snapshots {
            let snap_dir = dir.join("snapshots");
            fs::create_dir_all(&snap_dir)?;
            for (k, snap) in traj.snapshots.iter().enumerate() {
                for (name, field) in [("u", &snap.u), ("v", &snap.v)] {
                    let mut buf = Vec::new();
                    field.write_csv(&mut buf, Some(snap.t))?;
                    fs::write(snap_dir.join(format!("{name}_{k:05}.csv")), buf)?;
                }
            }
        }
    }

    Ok(RunOutcome {
        trajectory: traj,
        monitors,
        blow_up,
    })
}

// --- sweep -------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub b: f64,
    pub alpha: f64,
    pub eps: f64,
    pub cells: usize,
    /// ok | blowup | stiffness | error
    pub status: String,
    pub terminal_mass: Option<f64>,
    pub terminal_linf_v: Option<f64>,
    pub min_mass: Option<f64>,
    pub monitors_hard_pass: Option<bool>,
    pub classical_guarantee: Option<bool>,
    pub weak_guarantee: Option<bool>,
    pub eventual_smoothness: Option<bool>,
    pub detail: String,
}

const SWEEP_HEADER: &str = "index,b,alpha,eps,cells,status,terminal_mass,terminal_linf_v,min_mass,monitors_hard_pass,classical_guarantee,weak_guarantee,eventual_smoothness,detail";

fn opt<T: std::fmt::Display>(x: &Option<T>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

pub fn sweep_rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.index,
            r.b,
            r.alpha,
            r.eps,
            r.cells,
            r.status,
            opt(&r.terminal_mass),
            opt(&r.terminal_linf_v),
            opt(&r.min_mass),
            opt(&r.monitors_hard_pass),
            opt(&r.classical_guarantee),
            opt(&r.weak_guarantee),
            opt(&r.eventual_smoothness),
            r.detail.replace(',', ";"),
        ));
    }
    out
}

fn run_point(point: &SweepPoint, dir: &Path) -> SweepRow {
    let mut row = SweepRow {
        index: point.index,
        b: point.b,
        alpha: point.alpha,
        eps: point.eps,
        cells: point.cells,
        status: "error".into(),
        terminal_mass: None,
        terminal_linf_v: None,
        min_mass: None,
        monitors_hard_pass: None,
        classical_guarantee: None,
        weak_guarantee: None,
        eventual_smoothness: None,
        detail: String::new(),
    };
    let built = match point.config.build() {
        Ok(b) => b,
        Err(e) => {
            row.detail = e.to_string();
            return row;
        }
    };
    match execute_run(&built, None, Some(dir)) {
        Ok(outcome) => {
            let records = &outcome.trajectory.records;
            row.terminal_mass = records.last().map(|r| r.mass);
            row.terminal_linf_v = records.last().map(|r| r.linf_v);
            row.min_mass = records
                .iter()
                .map(|r| r.mass)
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))));
            match &outcome.blow_up {
                Some(b) => {
                    row.status = "blowup".into();
                    row.detail = b.note.clone();
                }
                None => {
                    row.status = "ok".into();
                    row.monitors_hard_pass = outcome.monitors.as_ref().map(|m| m.hard_pass);
                }
            }
            if let Ok(threshold) = classify_regime(
                &built.params,
                built.analysis_n,
                built.v0.linf_norm(),
                built.lambda_phi,
            ) {
                row.classical_guarantee = Some(threshold.classical_guarantee.guaranteed);
                row.weak_guarantee = Some(threshold.weak_guarantee.guaranteed);
                row.eventual_smoothness = Some(threshold.eventual_smoothness.guaranteed);
            }
        }
        Err(Error::Stiffness { .. }) => {
            row.status = "stiffness".into();
            row.detail = "stable dt fell below dt_min".into();
        }
        Err(e) => {
            row.detail = e.to_string();
        }
    }
    row
}

/// Runs every sweep point (in parallel), never aborting on a point failure,
/// and writes `sweep_summary.csv`. The row count always equals the
/// cross-product cardinality.
pub fn execute_sweep(sweep: &SweepConfigFile) -> Result<(PathBuf, Vec<SweepRow>)> {
    let out_dir = sweep.output.dir.clone();
    prepare_output_dir(&out_dir)?;
    let points = sweep.points()?;

    let mut rows: Vec<SweepRow> = points
        .par_iter()
        .map(|p| run_point(p, &out_dir.join(format!("point_{:04}", p.index))))
        .collect();
    rows.sort_by_key(|r| r.index);

    let csv = sweep_rows_to_csv(&rows);
    let mut f = fs::File::create(out_dir.join("sweep_summary.csv"))?;
    f.write_all(csv.as_bytes())?;
    Ok((out_dir, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_run_config;

    const BASE: &str = r#"
eps = 1e-2

[grid]
cells = [32]
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
kind = "cosine"
base = 1.0
amplitude = 0.2
modes = [1]

[solver]
t_end = 0.05
record_dt = 0.01
snapshots = true
"#;

    #[test]
    fn run_outputs_written() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = parse_run_config(BASE).unwrap();
        let built = cfg.build().unwrap();
        let outcome = execute_run(&built, Some(BASE), Some(tmp.path())).unwrap();
        assert!(outcome.blow_up.is_none());
        assert!(outcome.monitors.unwrap().hard_pass);
        for name in [
            "config.toml",
            "records.csv",
            "monitor_report.json",
            "threshold_report.json",
        ] {
            assert!(tmp.path().join(name).exists(), "{name} missing");
        }
        assert!(tmp.path().join("snapshots/u_00000.csv").exists());

        // config echo round-trips to an equivalent run
        let echoed = std::fs::read_to_string(tmp.path().join("config.toml")).unwrap();
        let again = parse_run_config(&echoed).unwrap().build().unwrap();
        assert_eq!(again.u0, built.u0);
        assert_eq!(again.eps, built.eps);
    }

    #[test]
    fn rerun_reproduces_records_exactly() {
        let cfg = parse_run_config(BASE).unwrap();
        let built = cfg.build().unwrap();
        let a = execute_run(&built, None, None).unwrap();
        let b = execute_run(&built, None, None).unwrap();
        assert_eq!(
            a.trajectory.records, b.trajectory.records,
            "reruns are bit-identical"
        );
    }
}
