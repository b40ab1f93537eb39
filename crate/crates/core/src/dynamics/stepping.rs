//! Time stepping: explicit upwind transport + Patankar logistic for `u`,
//! backward-Euler diffusion + exact-factor consumption for `v`, and the
//! trajectory driver.

use crate::diagnostics::{self, Accumulators, DiagnosticsConfig};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::scalar::Scalar;

use super::flux::{add_flux_divergence, max_drift_speed, MotilityEval};
use super::{
    BlowUpReport, PhysParams, RecordCadence, RunStatus, Snapshot, SolverConfig, State, Trajectory,
};

/// Optional manufactured source terms, used by the verification studies; the
/// physical model has none.
pub trait SourceTerms<T: Scalar>: Sync {
    fn u_source(&self, x: T, y: T, t: T) -> T;
    fn v_source(&self, x: T, y: T, t: T) -> T;
}

/// Largest stable step at the current state:
/// `cfl_safety * min(diffusion bound, drift bound, dt_max)`, where the
/// diffusion bound is `1 / (2 * max(phi_eps) * sum_a 1/h_a^2)` (equal to
/// `h^2 / (2*dim*max(phi_eps))` on uniform spacing) and the drift bound is
/// `h_min / max|w|`.
pub fn stable_dt<T: Scalar>(
    state: &State<T>,
    params: &PhysParams<T>,
    config: &SolverConfig<T>,
) -> Result<T> {
    let eval = MotilityEval::new(&params.motility, &state.v, state.eps)?;
    let mut max_diff = T::zero();
    for &v in state.v.values() {
        max_diff = max_diff.max(eval.phi(v) + state.eps);
    }
    let g = state.u.grid();
    let inv_h2_sum = g
        .spacing()
        .iter()
        .fold(T::zero(), |acc, &h| acc + T::one() / (h * h));
    let dt_diffusion = if max_diff > T::zero() {
        T::one() / (T::of(2.0) * max_diff * inv_h2_sum)
    } else {
        T::infinity()
    };

    let max_w = max_drift_speed(&state.v, &eval);
    let h_min = g.spacing().iter().fold(T::infinity(), |m, &h| m.min(h));
    let dt_drift = if max_w > T::zero() {
        h_min / max_w
    } else {
        T::infinity()
    };

    let dt = config.cfl_safety * dt_diffusion.min(dt_drift).min(config.dt_max);
    if dt < config.dt_min {
        return Err(Error::Stiffness {
            dt: dt.as_f64(),
            dt_min: config.dt_min.as_f64(),
            detail: format!("max phi_eps = {max_diff}, max drift speed = {max_w}"),
        });
    }
    Ok(dt)
}

/// One step of size chosen by [`stable_dt`].
pub fn step<T: Scalar>(
    state: &State<T>,
    params: &PhysParams<T>,
    config: &SolverConfig<T>,
) -> Result<State<T>> {
    let dt = stable_dt(state, params, config)?;
    step_with_dt(state, params, config, dt, None)
}

/// One step of a given size.
///
/// * `u* = u + dt*(flux divergence + a*u + S_u)`, then the sink is absorbed
///   into a positive denominator: `u' = u* / (1 + dt*b*u^{gamma-1})`.
/// * `(I - dt*lap) v* = v + dt*S_v` (CG to the configured relative residual,
///   then projected into `[min rhs, max rhs]`, the envelope of the exact
///   solution), then `v' = v* / (1 + dt*u'/(1 + eps*u'))`.
pub fn step_with_dt<T: Scalar>(
    state: &State<T>,
    params: &PhysParams<T>,
    config: &SolverConfig<T>,
    dt: T,
    sources: Option<&dyn SourceTerms<T>>,
) -> Result<State<T>> {
    let g = state.u.grid().clone();
    let n = g.total_cells();
    let eval = MotilityEval::new(&params.motility, &state.v, state.eps)?;

    // u-update
    let mut rhs_u = vec![T::zero(); n];
    for (r, &u) in rhs_u.iter_mut().zip(state.u.values()) {
        *r = params.a * u;
    }
    if let Some(src) = sources {
        for (c, r) in rhs_u.iter_mut().enumerate() {
            let p = g.position(c);
            *r += src.u_source(p[0], p[1], state.t);
        }
    }
    add_flux_divergence(&mut rhs_u, &state.u, &state.v, &eval, state.eps);

    let gamma = params.gamma;
    let quadratic = gamma == T::of(2.0);
    let mut u_new = vec![T::zero(); n];
    for c in 0..n {
        let u = state.u.values()[c];
        let u_star = u + dt * rhs_u[c];
        let sink_rate = if quadratic {
            u
        } else {
            u.powf(gamma - T::one())
        };
        u_new[c] = u_star / (T::one() + dt * params.b * sink_rate);
    }

    // v-update: implicit diffusion first, then the consumption factor built
    // from the already-updated u
    let mut rhs_v = state.v.values().to_vec();
    if let Some(src) = sources {
        for (c, r) in rhs_v.iter_mut().enumerate() {
            let p = g.position(c);
            *r += dt * src.v_source(p[0], p[1], state.t + dt);
        }
    }
    let v_star =
        solve_implicit_diffusion(&g, &rhs_v, dt, config.linear_tol, config.max_linear_iters)?;

    let mut v_new = vec![T::zero(); n];
    for c in 0..n {
        let up = u_new[c];
        let consumption = up / (T::one() + state.eps * up);
        v_new[c] = v_star[c] / (T::one() + dt * consumption);
    }

    let t_new = state.t + dt;
    for c in 0..n {
        if !(u_new[c].is_finite()
            && v_new[c].is_finite()
            && u_new[c] > T::zero()
            && v_new[c] > T::zero())
        {
            return Err(Error::BlowUp {
                t: t_new.as_f64(),
                detail: format!("cell {c}: u = {}, v = {}", u_new[c], v_new[c]),
            });
        }
    }

    Ok(State {
        u: Field::new(g.clone(), u_new)?,
        v: Field::new(g, v_new)?,
        t: t_new,
        eps: state.eps,
    })
}

/// Matrix-free conjugate gradients for `(I - dt*lap_h) x = b` with the
/// reflection-ghost Neumann Laplacian. The system is symmetric positive
/// definite and its exact solution lies in `[min b, max b]` (the operator
/// inverse is a stochastic matrix); the returned iterate is projected into
/// that envelope so solver tolerance can never violate the maximum principle.
fn solve_implicit_diffusion<T: Scalar>(
    grid: &Grid<T>,
    b: &[T],
    dt: T,
    tol: T,
    max_iters: usize,
) -> Result<Vec<T>> {
    let n = b.len();
    let apply = |x: &[T], out: &mut [T]| {
        // out = x - dt * lap(x)
        match grid.dim() {
            1 => {
                let nx = grid.cells()[0];
                let coeff = dt / (grid.spacing()[0] * grid.spacing()[0]);
                for i in 0..nx {
                    let l = if i == 0 { x[0] } else { x[i - 1] };
                    let r = if i + 1 == nx { x[nx - 1] } else { x[i + 1] };
                    out[i] = x[i] - coeff * (l - T::of(2.0) * x[i] + r);
                }
            }
            _ => {
                let (nx, ny) = (grid.cells()[0], grid.cells()[1]);
                let cx = dt / (grid.spacing()[0] * grid.spacing()[0]);
                let cy = dt / (grid.spacing()[1] * grid.spacing()[1]);
                for iy in 0..ny {
                    for ix in 0..nx {
                        let c = ix + nx * iy;
                        let l = if ix == 0 { x[c] } else { x[c - 1] };
                        let r = if ix + 1 == nx { x[c] } else { x[c + 1] };
                        let d = if iy == 0 { x[c] } else { x[c - nx] };
                        let u = if iy + 1 == ny { x[c] } else { x[c + nx] };
                        out[c] = x[c]
                            - cx * (l - T::of(2.0) * x[c] + r)
                            - cy * (d - T::of(2.0) * x[c] + u);
                    }
                }
            }
        }
    };

    let dot = |a: &[T], b: &[T]| -> T { a.iter().zip(b).map(|(&x, &y)| x * y).sum() };

    let mut x = b.to_vec(); // warm start; exact for constant b
    let mut ax = vec![T::zero(); n];
    apply(&x, &mut ax);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &axi)| bi - axi).collect();
    let b_norm = dot(b, b).sqrt();
    let target = tol * b_norm;

    let mut rs_old = dot(&r, &r);
    if rs_old.sqrt() > target {
        let mut p = r.clone();
        let mut ap = vec![T::zero(); n];
        let mut converged = false;
        for _ in 0..max_iters {
            apply(&p, &mut ap);
            let p_ap = dot(&p, &ap);
            if p_ap <= T::zero() {
                break; // SPD operator: only reachable through rounding at convergence
            }
            let alpha = rs_old / p_ap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rs_new = dot(&r, &r);
            if rs_new.sqrt() <= target {
                converged = true;
                break;
            }
            let beta = rs_new / rs_old;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rs_old = rs_new;
        }
        if !converged && dot(&r, &r).sqrt() > target {
            return Err(Error::Solver(format!(
                "implicit diffusion CG did not reach relative residual {tol:e} within {max_iters} iterations"
            )));
        }
    }

    let lo = b.iter().fold(T::infinity(), |m, &v| m.min(v));
    let hi = b.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    for xi in x.iter_mut() {
        *xi = (*xi).max(lo).min(hi);
    }
    Ok(x)
}

/// Residual of the discrete mass budget over one step:
/// `int u' - int u - dt*(a*int u - b*S)` with `S = sum u'*u^{gamma-1}*h^dim`
/// the scheme's own sink quadrature. Transport contributes exactly zero, so
/// this is rounding-level for any valid step.
pub fn mass_identity_residual<T: Scalar>(
    pre: &State<T>,
    post: &State<T>,
    params: &PhysParams<T>,
    dt: T,
) -> T {
    let cv = pre.u.grid().cell_volume();
    let quadratic = params.gamma == T::of(2.0);
    let mut sink = T::zero();
    for (&u0, &u1) in pre.u.values().iter().zip(post.u.values()) {
        let rate = if quadratic {
            u0
        } else {
            u0.powf(params.gamma - T::one())
        };
        sink += u1 * rate;
    }
    let sink = sink * cv;
    let m0 = pre.u.integrate();
    let m1 = post.u.integrate();
    m1 - m0 - dt * (params.a * m0 - params.b * sink)
}

/// Advances the state to `t_end`, emitting diagnostics rows (and optional
/// snapshots) at the configured cadence. Blow-up (guard exceeded, NaN, or a
/// positivity failure) terminates the run early with a partial trajectory.
pub fn run<T: Scalar>(
    u0: Field<T>,
    v0: Field<T>,
    params: &PhysParams<T>,
    eps: T,
    config: &SolverConfig<T>,
    diag: &DiagnosticsConfig,
) -> Result<Trajectory<T>> {
    config.validate()?;
    let mut state = State::new(u0, v0, T::zero(), eps)?;
    let mut acc = Accumulators::new(&state, params, diag)?;
    let mut records = vec![diagnostics::record(&state, params, diag, &mut acc, 0.0)?];
    let mut snapshots = Vec::new();
    if config.snapshots {
        snapshots.push(Snapshot {
            t: state.t,
            u: state.u.clone(),
            v: state.v.clone(),
        });
    }

    let mut steps: u64 = 0;
    let mut next_record_index: u64 = 1;

    let status = loop {
        if state.t >= config.t_end {
            break RunStatus::Completed;
        }
        // next time we must land on exactly
        let target = match config.cadence {
            RecordCadence::Time(rec_dt) => {
                (rec_dt * T::of(next_record_index as f64)).min(config.t_end)
            }
            RecordCadence::Steps(_) => config.t_end,
        };

        let dt_stable = stable_dt(&state, params, config)?;
        let remaining = target - state.t;
        let (dt, landed) = if dt_stable >= remaining {
            (remaining, true)
        } else {
            (dt_stable, false)
        };

        match step_with_dt(&state, params, config, dt, None) {
            Ok(mut next) => {
                if landed {
                    next.t = target;
                }
                steps += 1;
                state = next;
                // budgets advance every step so their trapezoid rule resolves
                // transients far below the record cadence
                acc.accumulate(&state, params, diag);
            }
            Err(Error::BlowUp { t, detail }) => {
                break RunStatus::BlowUp(BlowUpReport {
                    t_fail: t,
                    linf_u: state.u.linf_norm().as_f64(),
                    steps_completed: steps,
                    detail,
                });
            }
            Err(e) => return Err(e),
        }

        if state.u.linf_norm() > config.blowup_guard {
            break RunStatus::BlowUp(BlowUpReport {
                t_fail: state.t.as_f64(),
                linf_u: state.u.linf_norm().as_f64(),
                steps_completed: steps,
                detail: format!(
                    "sup norm of u exceeded the guard {:e}",
                    config.blowup_guard.as_f64()
                ),
            });
        }

        let record_now = match config.cadence {
            RecordCadence::Time(_) => landed,
            RecordCadence::Steps(k) => steps % (k as u64) == 0 || state.t >= config.t_end,
        };
        if record_now {
            records.push(diagnostics::record(
                &state,
                params,
                diag,
                &mut acc,
                dt.as_f64(),
            )?);
            if config.snapshots {
                snapshots.push(Snapshot {
                    t: state.t,
                    u: state.u.clone(),
                    v: state.v.clone(),
                });
            }
            next_record_index += 1;
        }
    };

    if let RunStatus::BlowUp(_) = &status {
        // keep whatever was recorded; the caller reports the partial run
    }

    Ok(Trajectory {
        records,
        snapshots,
        final_state: state,
        status,
        steps,
    })
}
