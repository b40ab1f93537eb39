use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ksc_cli::{acceptance, config, exit_codes, orchestrate};
use ksc_core::analysis::{b_threshold, classify_regime, default_lambda_phi, kappa1, kappa2};
use ksc_core::motility::{HypothesisMode, LadderConfig};
use ksc_core::Error;

/// Finite-volume simulator and verification harness for a
/// chemotaxis-consumption system with signal-dependent motility.
#[derive(Parser)]
#[command(name = "ksc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write records, monitor and threshold reports.
    Run {
        /// Path to a run configuration (TOML)
        config: PathBuf,
        /// Override the output directory from the config
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a cross-product sweep; every point gets its own output directory.
    Sweep {
        /// Path to a sweep configuration (TOML)
        config: PathBuf,
    },
    /// Run the acceptance battery and print one pass/fail line per criterion.
    Verify {
        /// Run a single criterion (1..=12)
        #[arg(long)]
        only: Option<usize>,
    },
    /// Print the explicit constants and degradation thresholds.
    Constants {
        /// Dimensions to tabulate
        #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
        n: Vec<u32>,
        /// Motility exponents to tabulate
        #[arg(long, value_delimiter = ',', default_value = "1.0,1.5,2.0")]
        alpha: Vec<f64>,
        /// Signal sup norm entering the threshold
        #[arg(long, default_value_t = 1.0)]
        v0_linf: f64,
        /// Gradient-estimate constant; defaults to alpha^2
        #[arg(long)]
        lambda_phi: Option<f64>,
        /// Emit JSON instead of a table
        #[arg(long)]
        json: bool,
    },
    /// Check the structural motility hypotheses declared in a configuration.
    Hypotheses {
        /// Path to a run configuration (TOML)
        config: PathBuf,
        /// Hypothesis set: "classical" or "weak"
        #[arg(long, default_value = "classical")]
        mode: String,
    },
}

fn init_workers() {
    if let Ok(n) = std::env::var("KSC_WORKERS") {
        if let Ok(n) = n.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Expr { .. } | Error::Io(_) => exit_codes::CONFIG,
        Error::BlowUp { .. } => exit_codes::BLOW_UP,
        _ => exit_codes::FAIL,
    }
}

fn cmd_run(config_path: &PathBuf, out: Option<PathBuf>) -> i32 {
    let (cfg, src) = match config::load_run_config(config_path) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("{e}");
            return exit_codes::CONFIG;
        }
    };
    let built = match cfg.build() {
        Ok(mut b) => {
            if let Some(dir) = out {
                b.output_dir = Some(dir);
            }
            b
        }
        Err(e) => {
            eprintln!("{e}");
            return exit_codes::CONFIG;
        }
    };
    let Some(dir) = built.output_dir.clone() else {
        eprintln!("config error: no output directory configured (set [output] dir or pass --out)");
        return exit_codes::CONFIG;
    };
    match orchestrate::execute_run(&built, Some(&src), Some(&dir)) {
        Ok(outcome) => {
            if let Some(b) = &outcome.blow_up {
                eprintln!("blow-up at t = {}: {}", b.report.t_fail, b.note);
                return exit_codes::BLOW_UP;
            }
            let monitors = outcome.monitors.expect("completed run has monitors");
            for entry in &monitors.entries {
                println!(
                    "{:<32} {}  observed {: >14.6e}  bound {: >14.6e}",
                    entry.id,
                    if entry.passed { "PASS" } else { "FAIL" },
                    entry.observed,
                    entry.bound
                );
            }
            println!("outputs in {}", dir.display());
            if monitors.hard_pass {
                exit_codes::OK
            } else {
                exit_codes::FAIL
            }
        }
        Err(e) => {
            eprintln!("{e}");
            error_code(&e)
        }
    }
}

fn cmd_sweep(config_path: &PathBuf) -> i32 {
    let sweep = match config::load_sweep_config(config_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return exit_codes::CONFIG;
        }
    };
    match orchestrate::execute_sweep(&sweep) {
        Ok((dir, rows)) => {
            let ok = rows.iter().filter(|r| r.status == "ok").count();
            println!(
                "{} points, {} ok; summary in {}",
                rows.len(),
                ok,
                dir.join("sweep_summary.csv").display()
            );
            exit_codes::OK
        }
        Err(e) => {
            eprintln!("{e}");
            error_code(&e)
        }
    }
}

fn cmd_verify(only: Option<usize>) -> i32 {
    match only {
        Some(id) => {
            let r = acceptance::criterion(id);
            println!("{}", r.line());
            if r.passed {
                exit_codes::OK
            } else {
                exit_codes::FAIL
            }
        }
        None => {
            let (_, all) = acceptance::run_all(true);
            if all {
                println!("acceptance: all criteria passed");
                exit_codes::OK
            } else {
                println!("acceptance: FAILURES above");
                exit_codes::FAIL
            }
        }
    }
}

fn cmd_constants(
    n_list: &[u32],
    alphas: &[f64],
    v0_linf: f64,
    lambda_phi: Option<f64>,
    json: bool,
) -> i32 {
    #[derive(serde::Serialize)]
    struct Row {
        n: u32,
        alpha: f64,
        lambda_phi: f64,
        kappa1: Option<f64>,
        kappa2: Option<f64>,
        b_threshold: f64,
        vacuous: bool,
    }
    let mut rows = Vec::new();
    for &n in n_list {
        for &alpha in alphas {
            let lambda = lambda_phi.unwrap_or_else(|| default_lambda_phi(alpha));
            let thr = match b_threshold(n, alpha, v0_linf, lambda) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{e}");
                    return exit_codes::CONFIG;
                }
            };
            let p = n as f64 / 2.0;
            let (k1, k2) = if n >= 3 {
                (kappa1(p, n).ok(), kappa2(p, n).ok())
            } else {
                (None, None)
            };
            rows.push(Row {
                n,
                alpha,
                lambda_phi: lambda,
                kappa1: k1,
                kappa2: k2,
                b_threshold: thr.value,
                vacuous: thr.vacuous,
            });
        }
    }
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&rows).expect("rows serialise")
        );
    } else {
        println!(
            "{:>3} {:>7} {:>12} {:>16} {:>18} {:>18}  note",
            "n", "alpha", "lambda_phi", "kappa1(n/2,n)", "kappa2(n/2,n)", "b_threshold"
        );
        for r in rows {
            println!(
                "{:>3} {:>7} {:>12.6} {:>16} {:>18} {:>18.6e}  {}",
                r.n,
                r.alpha,
                r.lambda_phi,
                r.kappa1
                    .map(|v| format!("{v:.9}"))
                    .unwrap_or_else(|| "-".into()),
                r.kappa2
                    .map(|v| format!("{v:.6e}"))
                    .unwrap_or_else(|| "-".into()),
                r.b_threshold,
                if r.vacuous {
                    "any b > 0 suffices (n <= 2)"
                } else {
                    ""
                }
            );
        }
    }
    exit_codes::OK
}

fn cmd_hypotheses(config_path: &PathBuf, mode: &str) -> i32 {
    let (cfg, _) = match config::load_run_config(config_path) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("{e}");
            return exit_codes::CONFIG;
        }
    };
    let spec = match cfg.params.motility.build() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return exit_codes::CONFIG;
        }
    };
    let mode = match mode {
        "classical" => HypothesisMode::Classical,
        "weak" => HypothesisMode::Weak,
        other => {
            eprintln!("config error: unknown mode '{other}' (use classical or weak)");
            return exit_codes::CONFIG;
        }
    };
    match spec.check_hypotheses(mode, &LadderConfig::default()) {
        Ok(report) => {
            for e in &report.entries {
                println!(
                    "{:<26} {}  extremal {: >13.6e}  threshold {: >10.3e}  margin {: >13.6e}",
                    e.id,
                    if e.passed { "PASS" } else { "FAIL" },
                    e.observed_extremal,
                    e.threshold,
                    e.margin
                );
            }
            // the regime classification for context
            if let Ok(params) = ksc_core::dynamics::PhysParams::new(
                cfg.params.a,
                cfg.params.b,
                cfg.params.gamma,
                spec,
            ) {
                let n = cfg.analysis.n.unwrap_or(cfg.grid.cells.len() as u32);
                if let Ok(t) = classify_regime(&params, n, 1.0, cfg.analysis.lambda_phi) {
                    println!("classical: {}", t.classical_guarantee.condition);
                    println!("weak:      {}", t.weak_guarantee.condition);
                    println!("eventual:  {}", t.eventual_smoothness.condition);
                }
            }
            if report.passed_all {
                exit_codes::OK
            } else {
                exit_codes::FAIL
            }
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                Error::Consistency(_) => exit_codes::FAIL,
                _ => error_code(&e),
            }
        }
    }
}

fn main() -> ExitCode {
    init_workers();
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run { config, out } => cmd_run(config, out.clone()),
        Command::Sweep { config } => cmd_sweep(config),
        Command::Verify { only } => cmd_verify(*only),
        Command::Constants {
            n,
            alpha,
            v0_linf,
            lambda_phi,
            json,
        } => cmd_constants(n, alpha, *v0_linf, *lambda_phi, *json),
        Command::Hypotheses { config, mode } => cmd_hypotheses(config, mode),
    };
    ExitCode::from(code as u8)
}
