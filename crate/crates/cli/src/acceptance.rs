//! The acceptance battery: twelve desk-scale criteria covering the constant
//! arithmetic, every trajectory-level bound, the scheme's conservation and
//! positivity structure, manufactured-solution convergence, weak-form
//! residual decay, and the regularisation limit.
//!
//! `ksc verify` runs the whole battery; the integration tests run each
//! criterion on its own. Expensive trajectories are shared through a lazy
//! suite context so either path computes them once.

use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ksc_core::analysis::{
    b_threshold, eps_convergence_study, kappa1, kappa2, mms_convergence, weak_residual, MmsCase,
    ProblemSpec, TestFunction,
};
use ksc_core::diagnostics::{monitor_bounds, DiagnosticsConfig};
use ksc_core::dynamics::{
    logistic_closed_form, mass_identity_residual, run, stable_dt, step_with_dt,
    u_rhs_flux_divergence, PhysParams, RecordCadence, SolverConfig, State, Trajectory,
};
use ksc_core::grid::{Field, Grid};
use ksc_core::motility::{HypothesisMode, LadderConfig, MotilitySpec};
use ksc_core::{Error, Result};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "C{:02} {:<28} {}  {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

pub const CRITERIA: &[(usize, &str)] = &[
    (1, "constant-arithmetic"),
    (2, "mass-upper-bound"),
    (3, "v-linf-monotone"),
    (4, "discrete-mass-identity"),
    (5, "homogeneous-oracle"),
    (6, "mass-lower-bound"),
    (7, "dissipation-budgets"),
    (8, "eventual-signal-decay"),
    (9, "mms-convergence"),
    (10, "weak-form-residuals"),
    (11, "eps-convergence"),
    (12, "hypothesis-checker"),
];

pub fn criterion(id: usize) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|(k, _)| *k == id)
        .map(|(_, n)| *n)
        .unwrap_or("unknown");
    let outcome = match id {
        1 => c1_constants(),
        2 => c2_mass_upper(),
        3 => c3_v_monotone(),
        4 => c4_mass_identity(),
        5 => c5_homogeneous_oracle(),
        6 => c6_mass_lower(),
        7 => c7_budgets(),
        8 => c8_decay(),
        9 => c9_mms(),
        10 => c10_weak_residuals(),
        11 => c11_eps_convergence(),
        12 => c12_hypotheses(),
        _ => Err(Error::Config(format!("unknown criterion {id}"))),
    };
    match outcome {
        Ok(detail) => CriterionResult {
            id,
            name,
            passed: true,
            detail,
        },
        Err(e) => CriterionResult {
            id,
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Runs the full battery, printing one line per criterion when asked.
pub fn run_all(print: bool) -> (Vec<CriterionResult>, bool) {
    let mut results = Vec::new();
    for &(id, _) in CRITERIA {
        let r = criterion(id);
        if print {
            println!("{}", r.line());
        }
        results.push(r);
    }
    let all = results.iter().all(|r| r.passed);
    (results, all)
}

fn fail(msg: String) -> Error {
    Error::Report(msg)
}

// --- shared suite runs -------------------------------------------------------

struct SuiteRun {
    label: String,
    params: PhysParams<f64>,
    u0: Field<f64>,
    v0: Field<f64>,
    diag: DiagnosticsConfig,
    traj: Trajectory<f64>,
    m1: f64,
}

struct Suite {
    /// 20 seeded random-positive runs over the (gamma, a, b) grid
    mass_runs: Vec<SuiteRun>,
    /// the long quadratic-degradation decay run
    decay: SuiteRun,
}

static SUITE: LazyLock<Suite> = LazyLock::new(build_suite);

fn suite_diag() -> DiagnosticsConfig {
    DiagnosticsConfig {
        lp_exponents: vec![2.0, 3.0],
        quasi_energy_pairs: vec![(2.0, 4.0)],
    }
}

fn build_suite() -> Suite {
    let grid = Grid::line(256, 1.0).expect("suite grid");
    let diag = suite_diag();

    let mut combos: Vec<(f64, f64, f64)> = Vec::new();
    for &gamma in &[2.0, 3.0] {
        for &a in &[0.5, 1.0, 2.0] {
            for &b in &[0.5, 1.0, 2.0] {
                combos.push((gamma, a, b));
            }
        }
    }

    let mut mass_runs = Vec::new();
    for k in 0..20usize {
        let (gamma, a, b) = combos[k % combos.len()];
        let params = PhysParams::new(a, b, gamma, MotilitySpec::power_law(1.0).unwrap()).unwrap();
        let mut rng_u = ChaCha8Rng::seed_from_u64(1000 + 2 * k as u64);
        let mut rng_v = ChaCha8Rng::seed_from_u64(1001 + 2 * k as u64);
        let u0 = Field::new(
            grid.clone(),
            (0..grid.total_cells())
                .map(|_| rng_u.gen_range(0.2..2.0))
                .collect(),
        )
        .unwrap();
        let v0 = Field::new(
            grid.clone(),
            (0..grid.total_cells())
                .map(|_| rng_v.gen_range(0.2..1.0))
                .collect(),
        )
        .unwrap();
        let mut cfg = SolverConfig::new(1.0);
        cfg.cadence = RecordCadence::Time(0.02);
        let traj = run(u0.clone(), v0.clone(), &params, 1e-2, &cfg, &diag).expect("suite run");
        let m1 = u0
            .integrate()
            .max((a / b).powf(1.0 / (gamma - 1.0)) * grid.volume());
        mass_runs.push(SuiteRun {
            label: format!("seed {k} (gamma={gamma}, a={a}, b={b})"),
            params,
            u0,
            v0,
            diag: diag.clone(),
            traj,
            m1,
        });
    }

    // quadratic degradation, strongly degenerate motility, long horizon
    let params = PhysParams::new(1.0, 1.0, 2.0, MotilitySpec::power_law(2.0).unwrap()).unwrap();
    let pi = std::f64::consts::PI;
    let u0 = Field::from_fn(&grid, |x, _| 1.0 + 0.2 * (pi * x).cos());
    let v0 = Field::from_fn(&grid, |x, _| 1.0 + 0.2 * (pi * x).cos());
    let mut cfg = SolverConfig::new(20.0);
    cfg.cadence = RecordCadence::Time(0.05);
    let traj = run(u0.clone(), v0.clone(), &params, 1e-3, &cfg, &diag).expect("decay run");
    let m1 = u0.integrate().max(grid.volume());
    let decay = SuiteRun {
        label: "decay run (gamma=2, alpha=2, a=b=1)".into(),
        params,
        u0,
        v0,
        diag,
        traj,
        m1,
    };

    Suite { mass_runs, decay }
}

fn all_suite_runs(suite: &Suite) -> impl Iterator<Item = &SuiteRun> {
    suite.mass_runs.iter().chain(std::iter::once(&suite.decay))
}

// --- criteria ------------------------------------------------------------------

/// kappa1(2,4) = 2 sqrt(3), kappa2(2,4) = 39337984/9, and the threshold at
/// (n=4, alpha=1, v0=1, lambda=1) is their sum; all to 1e-12 against
/// independently computed 50-digit references.
fn c1_constants() -> Result<String> {
    constants_check(
        kappa1(2.0, 4)?,
        kappa2(2.0, 4)?,
        b_threshold(4, 1.0, 1.0, 1.0)?.value,
    )
}

/// Split out so a fault-injection test can feed tampered constants through
/// the same comparison.
pub fn constants_check(k1: f64, k2: f64, threshold: f64) -> Result<String> {
    let k1_oracle = 3.4641016151377545870548926830117447;
    let k2_oracle = 39337984.0 / 9.0;
    let sum_oracle = 4370890.575212726248865698166;
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
    if rel(k1, k1_oracle) > 1e-12 {
        return Err(fail(format!(
            "kappa1(2,4) = {k1} deviates from the oracle {k1_oracle}"
        )));
    }
    if rel(k2, k2_oracle) > 1e-12 {
        return Err(fail(format!(
            "kappa2(2,4) = {k2} deviates from the oracle {k2_oracle}"
        )));
    }
    if rel(threshold, sum_oracle) > 1e-12 {
        return Err(fail(format!(
            "b_threshold(4,1,1,1) = {threshold} is not the sum of the kappa values {sum_oracle}"
        )));
    }
    if rel(threshold, k1 + k2) > 1e-13 {
        return Err(fail(
            "threshold does not decompose into kappa1 + kappa2".into(),
        ));
    }
    Ok(format!(
        "kappa1 = {k1:.15}, kappa2 = {k2:.6}, threshold = {threshold:.6}"
    ))
}

/// Every recorded mass stays below `m1 + 1e-8 (1 + m1)` on 20 seeded
/// random-positive runs over gamma in {2,3}, a,b in {0.5,1,2}.
fn c2_mass_upper() -> Result<String> {
    let suite = &*SUITE;
    let mut worst = f64::NEG_INFINITY;
    for r in &suite.mass_runs {
        if !r.traj.status.completed() {
            return Err(fail(format!("{} did not complete", r.label)));
        }
        let bound = r.m1 + 1e-8 * (1.0 + r.m1);
        for rec in &r.traj.records {
            worst = worst.max(rec.mass - r.m1);
            if rec.mass > bound {
                return Err(fail(format!(
                    "{}: mass {} exceeds m1 = {} at t = {}",
                    r.label, rec.mass, r.m1, rec.t
                )));
            }
        }
    }
    Ok(format!("20 runs, worst mass - m1 = {worst:.3e}"))
}

/// The sup norm of v is nonincreasing (slack 1e-12) at every record of every
/// suite run.
fn c3_v_monotone() -> Result<String> {
    let suite = &*SUITE;
    let mut worst = f64::NEG_INFINITY;
    for r in all_suite_runs(suite) {
        for w in r.traj.records.windows(2) {
            let rise = w[1].linf_v - w[0].linf_v;
            worst = worst.max(rise);
            if rise > 1e-12 {
                return Err(fail(format!(
                    "{}: |v|_inf rises by {rise:.3e} at t = {}",
                    r.label, w[1].t
                )));
            }
        }
    }
    Ok(format!("21 runs, worst per-record rise = {worst:.3e}"))
}

/// Transport fluxes telescope exactly: the per-step mass change equals the
/// reaction quadrature to 1e-12 relative, and the flux divergence integrates
/// to zero.
fn c4_mass_identity() -> Result<String> {
    let grid = Grid::line(64, 1.0)?;
    let cfg = SolverConfig::new(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for &gamma in &[2.0f64, 3.0] {
        let params = PhysParams::new(1.0, 0.8, gamma, MotilitySpec::power_law(2.0).unwrap())?;
        for _ in 0..25 {
            let u = Field::new(
                grid.clone(),
                (0..64).map(|_| rng.gen_range(0.1..4.0)).collect(),
            )?;
            let v = Field::new(
                grid.clone(),
                (0..64).map(|_| rng.gen_range(0.1..2.0)).collect(),
            )?;

            let div = u_rhs_flux_divergence(&u, &v, &params, 1e-2)?;
            let scale: f64 = div.values().iter().map(|x| x.abs()).sum::<f64>() * grid.cell_volume();
            let total = div.integrate().abs();
            if total > 1e-12 * scale.max(1.0) {
                return Err(fail(format!("flux divergence integrates to {total:.3e}")));
            }

            let state = State::new(u, v, 0.0, 1e-2)?;
            let dt = stable_dt(&state, &params, &cfg)?;
            let next = step_with_dt(&state, &params, &cfg, dt, None)?;
            let res = mass_identity_residual(&state, &next, &params, dt).abs();
            let rel = res / (1.0 + state.u.integrate());
            worst = worst.max(rel);
            if rel > 1e-12 {
                return Err(fail(format!("mass identity residual {rel:.3e} relative")));
            }
        }
    }
    Ok(format!(
        "50 random steps, worst relative residual = {worst:.3e}"
    ))
}

/// Homogeneous data: the equilibrium is held to 1e-10, the signal tracks the
/// implicit-Euler-exact decay to 2e-3, and an off-equilibrium start matches
/// the closed-form logistic with temporal order >= 0.9 under dt halving.
fn c5_homogeneous_oracle() -> Result<String> {
    let grid = Grid::line(16, 1.0)?;
    let diag = suite_diag();
    let dt_cap = 1e-3 / 0.45; // safety * cap = 1e-3

    for &(a, b) in &[(1.0f64, 1.0), (2.0, 1.0), (1.0, 2.0)] {
        let params = PhysParams::new(a, b, 2.0, MotilitySpec::power_law(1.0).unwrap())?;
        let mut cfg = SolverConfig::new(1.0);
        cfg.dt_max = dt_cap;
        cfg.cadence = RecordCadence::Time(0.05);
        let u0 = Field::constant(&grid, a / b);
        let v0 = Field::constant(&grid, 1.0);
        let traj = run(u0, v0, &params, 0.0, &cfg, &diag)?;
        if !traj.status.completed() {
            return Err(fail("homogeneous run did not complete".into()));
        }
        let u_err = traj
            .final_state
            .u
            .values()
            .iter()
            .map(|&x| (x - a / b).abs())
            .fold(0.0f64, f64::max);
        if u_err > 1e-10 {
            return Err(fail(format!(
                "equilibrium drift {u_err:.3e} for a={a}, b={b}"
            )));
        }
        let v_err = (traj.final_state.v.linf_norm() - (-a / b as f64).exp()).abs();
        if v_err > 2e-3 {
            return Err(fail(format!(
                "terminal |v|_inf error {v_err:.3e} for a={a}, b={b}"
            )));
        }
    }

    // temporal order against the logistic closed form
    let params = PhysParams::new(1.0, 1.0, 2.0, MotilitySpec::power_law(1.0).unwrap())?;
    let exact = logistic_closed_form(2.0, 1.0, 1.0, 1.0);
    let mut errs = Vec::new();
    for &cap in &[dt_cap, dt_cap * 0.5] {
        let mut cfg = SolverConfig::new(1.0);
        cfg.dt_max = cap;
        cfg.cadence = RecordCadence::Time(0.25);
        let traj = run(
            Field::constant(&grid, 2.0),
            Field::constant(&grid, 1.0),
            &params,
            0.0,
            &cfg,
            &diag,
        )?;
        errs.push((traj.final_state.u.values()[0] - exact).abs());
    }
    let order = (errs[0] / errs[1]).log2();
    if !(order >= 0.9) {
        return Err(fail(format!(
            "temporal order {order:.3} from errors {errs:?}"
        )));
    }
    Ok(format!(
        "equilibrium exact, v decay tracked, temporal order {order:.2}"
    ))
}

/// On the long decay run the mass never drops below `a|Omega|/(b e) - 1e-6`
/// and the relative-entropy functional stays nonnegative.
fn c6_mass_lower() -> Result<String> {
    let suite = &*SUITE;
    let r = &suite.decay;
    if !r.traj.status.completed() {
        return Err(fail("decay run did not complete".into()));
    }
    let bound = 1.0 / std::f64::consts::E - 1e-6;
    let mut min_mass = f64::INFINITY;
    for rec in &r.traj.records {
        min_mass = min_mass.min(rec.mass);
        if rec.mass < bound {
            return Err(fail(format!(
                "mass {} below {bound} at t = {}",
                rec.mass, rec.t
            )));
        }
        if rec.lyapunov < -1e-12 {
            return Err(fail(format!(
                "lyapunov {} negative at t = {}",
                rec.lyapunov, rec.t
            )));
        }
    }
    Ok(format!("min mass = {min_mass:.6} >= 1/e - 1e-6"))
}

/// Cumulative `int int v^{p-2} |grad v|^2` stays below `int v0^p / (p(p-1))`
/// (tolerance 1e-6) for p in {2, 3} on every suite run; the deviation budget
/// is finite everywhere and flattens on the long run.
fn c7_budgets() -> Result<String> {
    let suite = &*SUITE;
    let mut worst_margin = f64::INFINITY;
    for r in all_suite_runs(suite) {
        let cv = r.v0.grid().cell_volume();
        for (i, &p) in r.diag.lp_exponents.iter().enumerate() {
            let v0p: f64 = r.v0.values().iter().map(|&x| x.powf(p)).sum::<f64>() * cv;
            let bound = v0p / (p * (p - 1.0)) + 1e-6;
            let observed = r
                .traj
                .records
                .last()
                .map(|rec| rec.cum_grad_v[i])
                .unwrap_or(f64::INFINITY);
            worst_margin = worst_margin.min(bound - observed);
            if observed > bound {
                return Err(fail(format!(
                    "{}: gradient budget p={p} is {observed:.6e}, bound {bound:.6e}",
                    r.label
                )));
            }
        }
        for rec in &r.traj.records {
            if !rec.cum_u_dev_sq.is_finite() {
                return Err(fail(format!("{}: deviation budget not finite", r.label)));
            }
        }
    }
    // flattening on the long run
    let report = monitor_bounds(
        &suite.decay.traj.records,
        &suite.decay.diag,
        &suite.decay.params,
        &suite.decay.u0,
        &suite.decay.v0,
    )?;
    let m6 = report
        .entry("M6-u-deviation-flattening")
        .ok_or_else(|| fail("M6 entry missing".into()))?;
    if !m6.passed {
        return Err(fail(format!(
            "deviation budget keeps growing: late increment {:.3e} vs bound {:.3e}",
            m6.observed, m6.bound
        )));
    }
    Ok(format!(
        "budgets bounded on 21 runs, worst margin {worst_margin:.3e}; long-run budget flattened"
    ))
}

/// The signal sup norm falls below 1e-2 on the decay run and stays there.
fn c8_decay() -> Result<String> {
    let suite = &*SUITE;
    let records = &suite.decay.traj.records;
    let delta = 1e-2;
    let first_below = records.iter().find(|r| r.linf_v < delta).map(|r| r.t);
    let Some(t0) = first_below else {
        return Err(fail(format!(
            "|v|_inf never fell below {delta} (final {})",
            records.last().map(|r| r.linf_v).unwrap_or(f64::NAN)
        )));
    };
    for r in records.iter().filter(|r| r.t >= t0) {
        if r.linf_v >= delta {
            return Err(fail(format!(
                "|v|_inf rose back above {delta} at t = {}",
                r.t
            )));
        }
    }
    Ok(format!("|v|_inf below {delta} from t = {t0}"))
}

/// Manufactured solutions: order >= 1.9 with the drift switched off, >= 0.9
/// with it active, and rounding-level errors at the exact fixed point.
fn c9_mms() -> Result<String> {
    let pure = mms_convergence(MmsCase::PureDiffusion, &[32, 64, 128])?;
    if !pure.monotone {
        return Err(fail(format!(
            "pure-diffusion errors not monotone: {:?}",
            pure.err_u
        )));
    }
    for &o in &pure.orders_u {
        if !(o >= 1.9) {
            return Err(fail(format!(
                "pure-diffusion u order {o:.3} < 1.9 ({:?})",
                pure.orders_u
            )));
        }
    }
    // the drift-active ladder starts at 128 cells; below that the v-error is
    // still preasymptotic
    let drift = mms_convergence(MmsCase::DriftActive, &[128, 256, 512])?;
    if !drift.monotone {
        return Err(fail(format!(
            "drift-active errors not monotone: {:?}",
            drift.err_u
        )));
    }
    for &o in drift.orders_u.iter().chain(&drift.orders_v) {
        if !(o >= 0.9) {
            return Err(fail(format!(
                "drift-active order {o:.3} < 0.9 (u {:?}, v {:?})",
                drift.orders_u, drift.orders_v
            )));
        }
    }
    let fixed = mms_convergence(MmsCase::FixedPoint, &[32, 64])?;
    for (&eu, &ev) in fixed.err_u.iter().zip(&fixed.err_v) {
        if eu > 1e-11 || ev > 1e-11 {
            return Err(fail(format!(
                "fixed-point errors not at rounding level: u {eu:.2e}, v {ev:.2e}"
            )));
        }
    }
    Ok(format!(
        "pure-diffusion orders {:?}, drift-active orders {:?}",
        pure.orders_u
            .iter()
            .map(|o| (o * 100.0).round() / 100.0)
            .collect::<Vec<_>>(),
        drift
            .orders_u
            .iter()
            .map(|o| (o * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    ))
}

/// Residuals of both weak identities against five seeded test functions
/// decrease with observed order >= 0.9 under simultaneous refinement. The
/// per-function residuals are signed quantities that can cross zero along the
/// refinement path, so each identity is measured by the RMS over the family.
fn c10_weak_residuals() -> Result<String> {
    let params = PhysParams::new(1.0, 1.0, 2.0, MotilitySpec::power_law(1.0).unwrap())?;
    let t_end = 0.5;
    let pi = std::f64::consts::PI;
    let mut rms_u = Vec::new();
    let mut rms_v = Vec::new();
    for &(cells, records) in &[(64usize, 64usize), (128, 128), (256, 256)] {
        let grid = Grid::line(cells, 1.0)?;
        let u0 = Field::from_fn(&grid, |x, _| 1.0 + 0.4 * (pi * x).cos());
        let v0 = Field::from_fn(&grid, |x, _| 1.0 + 0.3 * (2.0 * pi * x).cos());
        let mut cfg = SolverConfig::new(t_end);
        cfg.cadence = RecordCadence::Time(t_end / records as f64);
        cfg.snapshots = true;
        let traj = run(u0, v0, &params, 0.0, &cfg, &suite_diag())?;

        let mut su = 0.0;
        let mut sv = 0.0;
        for seed in 1..=5u64 {
            let f = TestFunction::seeded(seed, &grid, t_end);
            let (ru, rv) = weak_residual(&traj, &f, &params)?;
            su += ru * ru;
            sv += rv * rv;
        }
        rms_u.push((su / 5.0).sqrt());
        rms_v.push((sv / 5.0).sqrt());
    }

    let mut min_order = f64::INFINITY;
    for (label, rms) in [("u", &rms_u), ("v", &rms_v)] {
        for w in rms.windows(2) {
            if !(w[1] < w[0]) {
                return Err(fail(format!("r_{label} does not decrease: {rms:?}")));
            }
            let order = (w[0] / w[1]).log2();
            min_order = min_order.min(order);
            if !(order >= 0.9) {
                return Err(fail(format!("r_{label} order {order:.3} ({rms:?})")));
            }
        }
    }
    Ok(format!(
        "5 seeds, both identities, min observed order {min_order:.2}"
    ))
}

/// On a degenerate problem the eps ladder {1e-1 .. 1e-4} is Cauchy in
/// space-time L^2.
fn c11_eps_convergence() -> Result<String> {
    let grid = Grid::line(128, 1.0)?;
    let pi = std::f64::consts::PI;
    let u0 = Field::from_fn(&grid, |x, _| 1.0 + 0.3 * (pi * x).cos());
    let v0 = Field::from_fn(&grid, |x, _| 1.0 + 0.2 * (2.0 * pi * x).cos());
    let params = PhysParams::new(1.0, 1.0, 2.0, MotilitySpec::power_law(2.0).unwrap())?;
    let mut solver = SolverConfig::new(1.0);
    solver.cadence = RecordCadence::Time(0.02);
    let problem = ProblemSpec {
        grid,
        params,
        u0,
        v0,
        solver,
        diagnostics: suite_diag(),
    };
    let study = eps_convergence_study(&problem, &[1e-1, 1e-2, 1e-3, 1e-4])?;
    if !study.cauchy {
        return Err(fail(format!(
            "distances not monotone: {:?}",
            study.distances
        )));
    }
    Ok(format!(
        "distances {:?}",
        study
            .distances
            .iter()
            .map(|d| format!("{d:.3e}"))
            .collect::<Vec<_>>()
    ))
}

/// The hypothesis checker accepts the power-law prototypes with the expected
/// extremal ratios and rejects an inconsistent custom derivative triple.
fn c12_hypotheses() -> Result<String> {
    let ladder = LadderConfig::default();

    let spec = MotilitySpec::power_law_with_s0(0.4, 1.0)?;
    let report = spec.check_hypotheses(HypothesisMode::Weak, &ladder)?;
    let conc = report
        .entry("alpha-root-concave")
        .ok_or_else(|| fail("concavity entry missing".into()))?;
    if !conc.passed || conc.observed_extremal.abs() > 1e-10 {
        return Err(fail(format!(
            "alpha = 0.4 concavity check: extremal {:.3e}",
            conc.observed_extremal
        )));
    }

    let spec = MotilitySpec::power_law(1.5)?;
    let report = spec.check_hypotheses(HypothesisMode::Classical, &ladder)?;
    let lower = report.entry("phi-over-s-alpha-floor").unwrap();
    let upper = report.entry("dphi-ratio-bounded").unwrap();
    if !report.passed_all
        || (lower.observed_extremal - 1.0).abs() > 1e-12
        || (upper.observed_extremal - 1.5).abs() > 1e-12
    {
        return Err(fail(format!(
            "alpha = 1.5 ratios: {} and {}",
            lower.observed_extremal, upper.observed_extremal
        )));
    }

    let bad = MotilitySpec::custom(
        ksc_core::expr::Expr::parse("s*(1+s)").unwrap(),
        ksc_core::expr::Expr::parse("1+2*s").unwrap(),
        ksc_core::expr::Expr::parse("2.2").unwrap(),
        1.0,
        None,
        None,
    )?;
    match bad.check_hypotheses(HypothesisMode::Classical, &ladder) {
        Err(Error::Consistency(_)) => {}
        other => {
            return Err(fail(format!(
                "inconsistent custom triple not rejected: {other:?}"
            )))
        }
    }
    Ok("power laws verified, inconsistent custom triple rejected".into())
}
