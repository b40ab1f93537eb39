//! Convergence studies: the regularisation limit `eps -> 0` and manufactured
//! solutions for scheme verification.

use serde::Serialize;

use crate::diagnostics::DiagnosticsConfig;
use crate::dynamics::{
    run, stable_dt, step_with_dt, PhysParams, SolverConfig, SourceTerms, State, Trajectory,
};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::motility::MotilitySpec;
use crate::scalar::Scalar;

/// A fixed problem a study reruns under varied settings.
#[derive(Debug, Clone)]
pub struct ProblemSpec<T: Scalar> {
    pub grid: Grid<T>,
    pub params: PhysParams<T>,
    pub u0: Field<T>,
    pub v0: Field<T>,
    pub solver: SolverConfig<T>,
    pub diagnostics: DiagnosticsConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsStudy {
    pub eps: Vec<f64>,
    /// `L^2(Omega x (0,T))` distance of u between consecutive ladder runs
    pub distances: Vec<f64>,
    /// observed orders `ln(d_k/d_{k+1}) / ln(eps_k/eps_{k+1})`
    pub orders: Vec<f64>,
    /// consecutive distances decrease monotonically
    pub cauchy: bool,
}

impl EpsStudy {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("study serialises")
    }

    /// One row per ladder pair, for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps_coarse,eps_fine,distance,observed_order\n");
        for (k, &d) in self.distances.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.eps[k],
                self.eps[k + 1],
                d,
                self.orders
                    .get(k)
                    .map(|o| o.to_string())
                    .unwrap_or_default()
            ));
        }
        out
    }
}

/// Runs the fixed problem once per ladder entry and measures the pairwise
/// space-time `L^2` distances of `u` between consecutive entries.
pub fn eps_convergence_study<T: Scalar>(
    problem: &ProblemSpec<T>,
    eps_ladder: &[T],
) -> Result<EpsStudy> {
    if eps_ladder.len() < 3 {
        return Err(Error::Config("eps ladder needs at least 3 entries".into()));
    }
    if eps_ladder.windows(2).any(|w| w[1] >= w[0]) || eps_ladder.iter().any(|&e| !(e >= T::zero()))
    {
        return Err(Error::Config(
            "eps ladder must be descending and nonnegative".into(),
        ));
    }
    let mut solver = problem.solver.clone();
    solver.snapshots = true;

    let mut runs: Vec<Trajectory<T>> = Vec::with_capacity(eps_ladder.len());
    for &eps in eps_ladder {
        let traj = run(
            problem.u0.clone(),
            problem.v0.clone(),
            &problem.params,
            eps,
            &solver,
            &problem.diagnostics,
        )?;
        if !traj.status.completed() {
            return Err(Error::BlowUp {
                t: traj.final_state.t.as_f64(),
                detail: format!("eps-ladder run at eps = {eps} blew up; study aborted"),
            });
        }
        runs.push(traj);
    }

    let mut distances = Vec::new();
    for pair in runs.windows(2) {
        distances.push(space_time_l2_distance(&pair[0], &pair[1])?.as_f64());
    }
    let mut orders = Vec::new();
    for (k, w) in distances.windows(2).enumerate() {
        let ratio_eps = eps_ladder[k].as_f64() / eps_ladder[k + 1].as_f64();
        orders.push((w[0] / w[1]).ln() / ratio_eps.ln());
    }
    let cauchy = distances.windows(2).all(|w| w[1] < w[0]);
    Ok(EpsStudy {
        eps: eps_ladder.iter().map(|e| e.as_f64()).collect(),
        distances,
        orders,
        cauchy,
    })
}

/// Trapezoid-in-time `L^2(Omega x (0,T))` distance of the u-components of two
/// trajectories with identical snapshot times.
pub fn space_time_l2_distance<T: Scalar>(a: &Trajectory<T>, b: &Trajectory<T>) -> Result<T> {
    if a.snapshots.len() != b.snapshots.len() || a.snapshots.len() < 2 {
        return Err(Error::Sampling(
            "trajectories must share the snapshot cadence".into(),
        ));
    }
    let cv = a.snapshots[0].u.grid().cell_volume();
    let mut total = T::zero();
    for k in 0..a.snapshots.len() {
        let sa = &a.snapshots[k];
        let sb = &b.snapshots[k];
        if (sa.t - sb.t).abs() > T::of(1e-12) * (T::one() + sa.t.abs()) {
            return Err(Error::Sampling(format!(
                "snapshot times diverge: {} vs {}",
                sa.t, sb.t
            )));
        }
        let sq: T =
            sa.u.values()
                .iter()
                .zip(sb.u.values())
                .map(|(&x, &y)| (x - y) * (x - y))
                .sum::<T>()
                * cv;
        let weight = if k == 0 {
            (a.snapshots[1].t - sa.t) * T::of(0.5)
        } else if k + 1 == a.snapshots.len() {
            (sa.t - a.snapshots[k - 1].t) * T::of(0.5)
        } else {
            (a.snapshots[k + 1].t - a.snapshots[k - 1].t) * T::of(0.5)
        };
        total += sq * weight;
    }
    Ok(total.sqrt())
}

// --- manufactured solutions -------------------------------------------------

/// Which manufactured configuration to verify against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsCase {
    /// Constant signal: the cross-diffusion drift vanishes identically and the
    /// cell equation is pure diffusion; second-order convergence expected.
    PureDiffusion,
    /// Cosine signal: drift active, first-order upwind dominates.
    DriftActive,
    /// Homogeneous equilibrium held steady; errors sit at rounding level.
    FixedPoint,
}

#[derive(Debug, Clone, Serialize)]
pub struct MmsReport {
    pub case_name: String,
    pub cells: Vec<usize>,
    pub err_u: Vec<f64>,
    pub err_v: Vec<f64>,
    pub orders_u: Vec<f64>,
    pub orders_v: Vec<f64>,
    /// errors decrease monotonically with refinement
    pub monotone: bool,
}

impl MmsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("cells,err_u,err_v,order_u,order_v\n");
        for (k, &n) in self.cells.iter().enumerate() {
            let ord = |v: &Vec<f64>| {
                if k == 0 {
                    String::new()
                } else {
                    v[k - 1].to_string()
                }
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                n,
                self.err_u[k],
                self.err_v[k],
                ord(&self.orders_u),
                ord(&self.orders_v)
            ));
        }
        out
    }
}

/// Manufactured fields on (0,1): `u = 2 + cos(pi x) e^{-t}` and, in the
/// drift-active case, `v = 3/2 + cos(pi x) e^{-t}/4`; both have zero normal
/// derivative and stay positive. Linear motility (`phi(s) = s`), `a = b = 1`,
/// quadratic degradation, `eps = 0`.
struct Manufactured<T: Scalar> {
    case: MmsCase,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar> Manufactured<T> {
    fn new(case: MmsCase) -> Self {
        Manufactured {
            case,
            _marker: std::marker::PhantomData,
        }
    }

    fn u(&self, x: T, t: T) -> T {
        match self.case {
            MmsCase::FixedPoint => T::one(),
            _ => T::of(2.0) + (T::PI() * x).cos() * (-t).exp(),
        }
    }

    fn u_t(&self, x: T, t: T) -> T {
        match self.case {
            MmsCase::FixedPoint => T::zero(),
            _ => -(T::PI() * x).cos() * (-t).exp(),
        }
    }

    fn u_x(&self, x: T, t: T) -> T {
        match self.case {
            MmsCase::FixedPoint => T::zero(),
            _ => -T::PI() * (T::PI() * x).sin() * (-t).exp(),
        }
    }

    fn u_xx(&self, x: T, t: T) -> T {
        match self.case {
            MmsCase::FixedPoint => T::zero(),
            _ => -T::PI() * T::PI() * (T::PI() * x).cos() * (-t).exp(),
        }
    }

    fn v(&self, x: T, t: T) -> T {
        match self.case {
            MmsCase::DriftActive => T::of(1.5) + T::of(0.25) * (T::PI() * x).cos() * (-t).exp(),
            _ => T::one(),
        }
    }

    fn v_t(&self, x: T, t: T) -> T {
        match self.case {
            MmsCase::DriftActive => -T::of(0.25) * (T::PI() * x).cos() * (-t).exp(),
            _ => T::zero(),
        }
    }

    fn v_x(&self, x: T, t: T) -> T {
        match self.case {
            MmsCase::DriftActive => -T::of(0.25) * T::PI() * (T::PI() * x).sin() * (-t).exp(),
            _ => T::zero(),
        }
    }

    fn v_xx(&self, x: T, t: T) -> T {
        match self.case {
            MmsCase::DriftActive => {
                -T::of(0.25) * T::PI() * T::PI() * (T::PI() * x).cos() * (-t).exp()
            }
            _ => T::zero(),
        }
    }
}

impl<T: Scalar> SourceTerms<T> for Manufactured<T> {
    fn u_source(&self, x: T, _y: T, t: T) -> T {
        if self.case == MmsCase::FixedPoint {
            return T::zero();
        }
        // phi(s) = s: lap(u phi(v)) = v u_xx + 2 u_x v_x + u v_xx
        let u = self.u(x, t);
        let transport = self.v(x, t) * self.u_xx(x, t)
            + T::of(2.0) * self.u_x(x, t) * self.v_x(x, t)
            + u * self.v_xx(x, t);
        self.u_t(x, t) - transport - u + u * u
    }

    fn v_source(&self, x: T, _y: T, t: T) -> T {
        // v_t - v_xx + u v (eps = 0)
        self.v_t(x, t) - self.v_xx(x, t) + self.u(x, t) * self.v(x, t)
    }
}

/// Marches the manufactured problem on each resolution and reports terminal
/// `L^2` errors and observed spatial orders (the CFL ties dt to h^2, so the
/// refinement is simultaneous).
pub fn mms_convergence(case: MmsCase, resolutions: &[usize]) -> Result<MmsReport> {
    if resolutions.len() < 2 || (case != MmsCase::FixedPoint && resolutions.len() < 3) {
        return Err(Error::Config(
            "manufactured-solution study needs at least 3 resolutions".into(),
        ));
    }
    if resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::Config(
            "resolution ladder must refine by factors of 2".into(),
        ));
    }
    let t_end = 0.25f64;
    let mfg: Manufactured<f64> = Manufactured::new(case);
    let params = PhysParams::new(1.0, 1.0, 2.0, MotilitySpec::power_law(1.0).unwrap())?;

    let mut err_u = Vec::new();
    let mut err_v = Vec::new();
    for &n in resolutions {
        let grid = Grid::line(n, 1.0)?;
        let u0 = Field::from_fn(&grid, |x, _| mfg.u(x, 0.0));
        let v0 = Field::from_fn(&grid, |x, _| mfg.v(x, 0.0));
        let mut cfg = SolverConfig::new(t_end);
        cfg.dt_max = 1.0; // let the CFL rule
        let mut state = State::new(u0, v0, 0.0, 0.0)?;
        while state.t < t_end {
            let dt = stable_dt(&state, &params, &cfg)?.min(t_end - state.t);
            let mut next = step_with_dt(&state, &params, &cfg, dt, Some(&mfg))?;
            if t_end - next.t < 1e-14 {
                next.t = t_end;
            }
            state = next;
        }
        let mut eu = 0.0f64;
        let mut ev = 0.0f64;
        for c in 0..grid.total_cells() {
            let x = grid.cell_center(0, c);
            let du = state.u.values()[c] - mfg.u(x, t_end);
            let dv = state.v.values()[c] - mfg.v(x, t_end);
            eu += du * du;
            ev += dv * dv;
        }
        err_u.push((eu * grid.cell_volume()).sqrt());
        err_v.push((ev * grid.cell_volume()).sqrt());
    }

    let order =
        |errs: &[f64]| -> Vec<f64> { errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect() };
    let orders_u = order(&err_u);
    let orders_v = order(&err_v);
    let monotone = err_u.windows(2).all(|w| w[1] < w[0]) && err_v.windows(2).all(|w| w[1] <= w[0]);
    Ok(MmsReport {
        case_name: match case {
            MmsCase::PureDiffusion => "pure-diffusion".into(),
            MmsCase::DriftActive => "drift-active".into(),
            MmsCase::FixedPoint => "fixed-point".into(),
        },
        cells: resolutions.to_vec(),
        err_u,
        err_v,
        orders_u,
        orders_v,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::RecordCadence;

    fn degenerate_problem() -> ProblemSpec<f64> {
        let grid = Grid::line(64, 1.0).unwrap();
        let pi = std::f64::consts::PI;
        let u0 = Field::from_fn(&grid, |x, _| 1.0 + 0.3 * (pi * x).cos());
        let v0 = Field::from_fn(&grid, |x, _| 1.0 + 0.2 * (2.0 * pi * x).cos());
        let params = PhysParams::new(1.0, 1.0, 2.0, MotilitySpec::power_law(2.0).unwrap()).unwrap();
        let mut solver = SolverConfig::new(0.5);
        solver.cadence = RecordCadence::Time(0.02);
        ProblemSpec {
            grid,
            params,
            u0,
            v0,
            solver,
            diagnostics: DiagnosticsConfig::default(),
        }
    }

    #[test]
    fn identical_eps_gives_zero_distance() {
        let p = degenerate_problem();
        let mut solver = p.solver.clone();
        solver.snapshots = true;
        let a = run(
            p.u0.clone(),
            p.v0.clone(),
            &p.params,
            1e-2,
            &solver,
            &p.diagnostics,
        )
        .unwrap();
        let b = run(
            p.u0.clone(),
            p.v0.clone(),
            &p.params,
            1e-2,
            &solver,
            &p.diagnostics,
        )
        .unwrap();
        let d = space_time_l2_distance(&a, &b).unwrap();
        assert_eq!(d, 0.0, "identical runs are bit-identical");
    }

    #[test]
    fn ladder_validation() {
        let p = degenerate_problem();
        assert!(eps_convergence_study(&p, &[1e-1, 1e-2]).is_err());
        assert!(eps_convergence_study(&p, &[1e-2, 1e-1, 1e-3]).is_err());
    }

    #[test]
    fn fixed_point_mms_is_exact() {
        let report = mms_convergence(MmsCase::FixedPoint, &[16, 32]).unwrap();
        for (&eu, &ev) in report.err_u.iter().zip(&report.err_v) {
            assert!(eu < 1e-11, "u error {eu}");
            assert!(ev < 1e-11, "v error {ev}");
        }
    }

    #[test]
    fn bounded_below_motility_gives_linear_eps_order() {
        // phi = 1 + s never degenerates, so eps acts as a regular
        // perturbation and consecutive distances scale about linearly in eps
        let grid = Grid::line(64, 1.0).unwrap();
        let pi = std::f64::consts::PI;
        let u0 = Field::from_fn(&grid, |x, _| 1.0 + 0.3 * (pi * x).cos());
        let v0 = Field::from_fn(&grid, |x, _| 1.0 + 0.2 * (pi * x).cos());
        let motility = MotilitySpec::custom(
            crate::expr::Expr::parse("1+s").unwrap(),
            crate::expr::Expr::parse("1").unwrap(),
            crate::expr::Expr::parse("0").unwrap(),
            1.0,
            None,
            None,
        )
        .unwrap();
        let params = PhysParams::new(1.0, 1.0, 2.0, motility).unwrap();
        let mut solver = SolverConfig::new(0.3);
        solver.cadence = RecordCadence::Time(0.015);
        let problem = ProblemSpec {
            grid,
            params,
            u0,
            v0,
            solver,
            diagnostics: DiagnosticsConfig::default(),
        };
        let study = eps_convergence_study(&problem, &[1e-1, 1e-2, 1e-3]).unwrap();
        assert!(study.cauchy);
        for &o in &study.orders {
            assert!(
                (0.7..1.3).contains(&o),
                "order {o}, distances {:?}",
                study.distances
            );
        }
    }

    #[test]
    fn study_tables_serialise() {
        let report = mms_convergence(MmsCase::FixedPoint, &[16, 32]).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("cells,err_u,err_v,order_u,order_v\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!(report.to_json().contains("\"case_name\""));
    }

    #[test]
    fn bad_resolution_ladder_rejected() {
        assert!(mms_convergence(MmsCase::PureDiffusion, &[32, 48, 64]).is_err());
        assert!(mms_convergence(MmsCase::DriftActive, &[32, 64]).is_err());
    }
}
