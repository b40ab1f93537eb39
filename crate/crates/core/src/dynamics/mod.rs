//! The regularised chemotaxis-consumption dynamics: flux assembly, the
//! positivity-preserving IMEX step, the trajectory driver and the
//! spatially-homogeneous ODE oracle.

mod flux;
mod oracle;
mod stepping;

pub use flux::u_rhs_flux_divergence;
pub use oracle::{homogeneous_oracle, logistic_closed_form};
pub use stepping::{mass_identity_residual, run, stable_dt, step, step_with_dt, SourceTerms};

use serde::Serialize;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::motility::MotilitySpec;
use crate::scalar::Scalar;

/// Physical parameters of the reaction `a*u - b*u^gamma` and the motility.
#[derive(Debug, Clone)]
pub struct PhysParams<T: Scalar> {
    pub a: T,
    pub b: T,
    pub gamma: T,
    pub motility: MotilitySpec<T>,
}

impl<T: Scalar> PhysParams<T> {
    pub fn new(a: T, b: T, gamma: T, motility: MotilitySpec<T>) -> Result<Self> {
        if !(a > T::zero()) || !(b > T::zero()) {
            return Err(Error::Config(format!(
                "a and b must be positive, got a = {a}, b = {b}"
            )));
        }
        if !(gamma >= T::one()) {
            return Err(Error::Config(format!(
                "gamma must be at least 1, got {gamma}"
            )));
        }
        Ok(PhysParams {
            a,
            b,
            gamma,
            motility,
        })
    }

    /// The boundedness theory assumes quadratic or stronger degradation.
    pub fn in_theory_regime(&self) -> bool {
        self.gamma >= T::of(2.0)
    }

    /// Homogeneous equilibrium `(a/b)^{1/(gamma-1)}` of the logistic reaction.
    pub fn equilibrium(&self) -> T {
        if self.gamma == T::of(2.0) {
            self.a / self.b
        } else {
            (self.a / self.b).powf(T::one() / (self.gamma - T::one()))
        }
    }
}

/// One snapshot of the regularised system.
#[derive(Debug, Clone)]
pub struct State<T: Scalar> {
    pub u: Field<T>,
    pub v: Field<T>,
    pub t: T,
    pub eps: T,
}

impl<T: Scalar> State<T> {
    /// Validates strict positivity and finiteness of both fields.
    pub fn new(u: Field<T>, v: Field<T>, t: T, eps: T) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(Error::Config("u and v must live on the same grid".into()));
        }
        if !(eps >= T::zero() && eps < T::one()) {
            return Err(Error::Config(format!("eps must lie in [0, 1), got {eps}")));
        }
        if !u.is_finite() || !v.is_finite() {
            return Err(Error::Positivity("state fields must be finite".into()));
        }
        if !(u.min() > T::zero()) {
            return Err(Error::Positivity(format!(
                "u must be strictly positive, min = {}",
                u.min()
            )));
        }
        if !(v.min() > T::zero()) {
            return Err(Error::Positivity(format!(
                "v must be strictly positive, min = {}",
                v.min()
            )));
        }
        Ok(State { u, v, t, eps })
    }
}

/// When diagnostics rows are emitted along a run.
#[derive(Debug, Clone, Copy)]
pub enum RecordCadence<T: Scalar> {
    /// Every `k` steps.
    Steps(usize),
    /// At the times `0, dt, 2dt, ...` exactly (steps are clamped to land on
    /// them, so trajectories with equal cadence share record times bit for
    /// bit).
    Time(T),
}

#[derive(Debug, Clone)]
pub struct SolverConfig<T: Scalar> {
    pub cfl_safety: T,
    pub dt_max: T,
    pub dt_min: T,
    pub t_end: T,
    /// Relative residual tolerance of the implicit diffusion solve.
    pub linear_tol: T,
    pub max_linear_iters: usize,
    pub cadence: RecordCadence<T>,
    /// Keep full field snapshots at every record time.
    pub snapshots: bool,
    /// Declare blow-up when the sup norm of u exceeds this.
    pub blowup_guard: T,
    /// Drift discretisation order; only first-order donor-cell exists in v1.
    pub upwind_order: u8,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(t_end: T) -> Self {
        SolverConfig {
            cfl_safety: T::of(0.45),
            dt_max: T::of(1e-2),
            dt_min: T::of(1e-12),
            t_end,
            linear_tol: T::of(1e-10),
            max_linear_iters: 50_000,
            cadence: RecordCadence::Time(t_end / T::of(200.0)),
            snapshots: false,
            blowup_guard: T::of(1e12),
            upwind_order: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > T::zero() && self.cfl_safety <= T::one()) {
            return Err(Error::Config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.dt_min > T::zero() && self.dt_min <= self.dt_max) {
            return Err(Error::Config("need 0 < dt_min <= dt_max".into()));
        }
        if !(self.t_end > T::zero()) {
            return Err(Error::Config("t_end must be positive".into()));
        }
        if !(self.linear_tol > T::zero()) {
            return Err(Error::Config("linear_tol must be positive".into()));
        }
        if self.upwind_order != 1 {
            return Err(Error::Config(format!(
                "upwind_order {} not available; only first-order donor-cell upwinding exists in v1",
                self.upwind_order
            )));
        }
        match self.cadence {
            RecordCadence::Steps(k) if k == 0 => {
                Err(Error::Config("record cadence of 0 steps".into()))
            }
            RecordCadence::Time(dt) if !(dt > T::zero()) => {
                Err(Error::Config("record cadence must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Full-field snapshot kept along a trajectory when requested.
#[derive(Debug, Clone)]
pub struct Snapshot<T: Scalar> {
    pub t: T,
    pub u: Field<T>,
    pub v: Field<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowUpReport {
    pub t_fail: f64,
    pub linf_u: f64,
    pub steps_completed: u64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub enum RunStatus {
    Completed,
    BlowUp(BlowUpReport),
}

impl RunStatus {
    pub fn completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

/// Result of a run: diagnostics rows at the record cadence, optional field
/// snapshots, the final (or last valid) state, and the completion status.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Scalar> {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot<T>>,
    pub final_state: State<T>,
    pub status: RunStatus,
    pub steps: u64,
}
