//! Weak-form residual verification.
//!
//! A trajectory with uniformly spaced snapshots is tested against the
//! space-time integral identities of the weak formulation: for smooth test
//! functions `psi` vanishing at the final time,
//!
//! ```text
//! -int int u psi_t - int u0 psi(.,0)
//!     = -int int grad(u phi_eps(v)) . grad(psi) + a int int u psi - b int int u^gamma psi
//! -int int v psi_t - int v0 psi(.,0)
//!     = -int int grad(v) . grad(psi) - int int (u v / (1 + eps u)) psi
//! ```
//!
//! With `eps = 0` these are exactly the defining identities of a weak
//! solution of the limit system. Quadrature is midpoint in space and
//! trapezoid in time; both residuals shrink under simultaneous refinement of
//! the mesh, the step, and the snapshot cadence.

use crate::dynamics::{PhysParams, Trajectory};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;

/// Separable test function: per-axis low-order cosine series (zero normal
/// derivative on the rectangle by construction) times a smooth bump in time
/// that vanishes at both ends of `[0, t_end]`.
#[derive(Debug, Clone)]
pub struct TestFunction<T: Scalar> {
    /// `coeffs[0] + sum_m coeffs[m] cos(m pi x / L)` per axis
    coeffs_x: Vec<T>,
    coeffs_y: Vec<T>,
    lengths: [T; 2],
    t_end: T,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn unit(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

impl<T: Scalar> TestFunction<T> {
    /// Deterministic member of the seeded family: two cosine modes per axis
    /// with coefficients in [-1, 1] and an O(1) constant term.
    pub fn seeded(seed: u64, grid: &Grid<T>, t_end: T) -> Self {
        let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut draw = |lo: f64, hi: f64| T::of(lo + (hi - lo) * unit(&mut s));
        let coeffs_x = vec![draw(0.5, 1.5), draw(-1.0, 1.0), draw(-1.0, 1.0)];
        let coeffs_y = if grid.dim() == 2 {
            vec![draw(0.5, 1.5), draw(-1.0, 1.0), draw(-1.0, 1.0)]
        } else {
            vec![T::one()]
        };
        let lengths = [
            grid.lengths()[0],
            if grid.dim() == 2 {
                grid.lengths()[1]
            } else {
                T::one()
            },
        ];
        TestFunction {
            coeffs_x,
            coeffs_y,
            lengths,
            t_end,
        }
    }

    /// Constant-in-space member (still bump-shaped in time).
    pub fn constant_in_space(value: T, grid: &Grid<T>, t_end: T) -> Self {
        TestFunction {
            coeffs_x: vec![value],
            coeffs_y: vec![T::one()],
            lengths: [
                grid.lengths()[0],
                if grid.dim() == 2 {
                    grid.lengths()[1]
                } else {
                    T::one()
                },
            ],
            t_end,
        }
    }

    fn axis(coeffs: &[T], x: T, length: T) -> (T, T) {
        let mut val = T::zero();
        let mut slope = T::zero();
        for (m, &c) in coeffs.iter().enumerate() {
            if m == 0 {
                val += c;
            } else {
                let k = T::of(m as f64) * T::PI() / length;
                val += c * (k * x).cos();
                slope -= c * k * (k * x).sin();
            }
        }
        (val, slope)
    }

    /// Smooth bump on (0, t_end): `exp(1 - 1/(1 - tau^2))` with
    /// `tau = 2t/t_end - 1`, and its time derivative.
    fn bump(&self, t: T) -> (T, T) {
        let one = T::one();
        let tau = T::of(2.0) * t / self.t_end - one;
        if tau <= -one || tau >= one {
            return (T::zero(), T::zero());
        }
        let denom = one - tau * tau;
        let b = (one - one / denom).exp();
        let db = b * (-T::of(2.0) * tau / (denom * denom)) * (T::of(2.0) / self.t_end);
        (b, db)
    }

    pub fn value(&self, x: T, y: T, t: T) -> T {
        let (vx, _) = Self::axis(&self.coeffs_x, x, self.lengths[0]);
        let (vy, _) = Self::axis(&self.coeffs_y, y, self.lengths[1]);
        let (b, _) = self.bump(t);
        vx * vy * b
    }

    pub fn time_derivative(&self, x: T, y: T, t: T) -> T {
        let (vx, _) = Self::axis(&self.coeffs_x, x, self.lengths[0]);
        let (vy, _) = Self::axis(&self.coeffs_y, y, self.lengths[1]);
        let (_, db) = self.bump(t);
        vx * vy * db
    }

    pub fn gradient(&self, x: T, y: T, t: T) -> [T; 2] {
        let (vx, dx) = Self::axis(&self.coeffs_x, x, self.lengths[0]);
        let (vy, dy) = Self::axis(&self.coeffs_y, y, self.lengths[1]);
        let (b, _) = self.bump(t);
        [dx * vy * b, vx * dy * b]
    }
}

/// Assembles both weak identities over the stored snapshots and returns the
/// absolute residuals `(r_u, r_v)`.
pub fn weak_residual<T: Scalar>(
    traj: &Trajectory<T>,
    test_fn: &TestFunction<T>,
    params: &PhysParams<T>,
) -> Result<(T, T)> {
    let snaps = &traj.snapshots;
    if snaps.len() < 17 {
        return Err(Error::Sampling(format!(
            "weak residual needs at least 16 records inside the test support, trajectory has {} snapshots",
            snaps.len()
        )));
    }
    // uniform cadence check
    let dt0 = snaps[1].t - snaps[0].t;
    for w in snaps.windows(2) {
        let d = w[1].t - w[0].t;
        if ((d - dt0) / dt0).abs() > T::of(1e-9) {
            return Err(Error::Sampling(
                "weak residual needs uniformly spaced snapshots".into(),
            ));
        }
    }
    if snaps[0].t != T::zero() {
        return Err(Error::Sampling(
            "weak residual needs the initial snapshot at t = 0".into(),
        ));
    }

    let eps = traj.final_state.eps;
    let grid = snaps[0].u.grid().clone();
    let cv = grid.cell_volume();
    let n = grid.total_cells();
    let two_d = grid.dim() == 2;
    let gamma = params.gamma;

    // cell-center positions, fixed across snapshots
    let pos: Vec<[T; 2]> = (0..n).map(|c| grid.position(c)).collect();

    let k_max = snaps.len() - 1;
    let mut lhs_u = T::zero();
    let mut rhs_u = T::zero();
    let mut lhs_v = T::zero();
    let mut rhs_v = T::zero();

    for (k, snap) in snaps.iter().enumerate() {
        let weight = if k == 0 || k == k_max {
            T::of(0.5) * dt0
        } else {
            dt0
        };
        let t = snap.t;

        // phi_eps(v) * u and its reconstructed gradient
        let mut product = snap.u.clone();
        for (pc, (&u, &v)) in product
            .values_mut()
            .iter_mut()
            .zip(snap.u.values().iter().zip(snap.v.values()))
        {
            *pc = u * (params.motility.phi(v)? + eps);
        }
        let gw_x = product.cell_gradient(0);
        let gw_y = if two_d {
            Some(product.cell_gradient(1))
        } else {
            None
        };
        let gv_x = snap.v.cell_gradient(0);
        let gv_y = if two_d {
            Some(snap.v.cell_gradient(1))
        } else {
            None
        };

        let mut a_u = T::zero();
        let mut b_u = T::zero();
        let mut c_u = T::zero();
        let mut d_u = T::zero();
        let mut a_v = T::zero();
        let mut b_v = T::zero();
        let mut e_v = T::zero();
        for c in 0..n {
            let [x, y] = pos[c];
            let psi = test_fn.value(x, y, t);
            let psi_t = test_fn.time_derivative(x, y, t);
            let gpsi = test_fn.gradient(x, y, t);
            let u = snap.u.values()[c];
            let v = snap.v.values()[c];

            a_u += u * psi_t;
            c_u += u * psi;
            d_u += u.powf(gamma) * psi;
            let mut dot_w = gw_x[c] * gpsi[0];
            let mut dot_v = gv_x[c] * gpsi[0];
            if let (Some(gwy), Some(gvy)) = (&gw_y, &gv_y) {
                dot_w += gwy[c] * gpsi[1];
                dot_v += gvy[c] * gpsi[1];
            }
            b_u += dot_w;
            b_v += dot_v;
            a_v += v * psi_t;
            e_v += (u * v / (T::one() + eps * u)) * psi;
        }

        lhs_u -= weight * a_u * cv;
        rhs_u += weight * (-b_u + params.a * c_u - params.b * d_u) * cv;
        lhs_v -= weight * a_v * cv;
        rhs_v += weight * (-b_v - e_v) * cv;
    }

    // initial-time terms (the bump vanishes at t = 0, but the assembly covers
    // test functions with psi(., 0) != 0 too)
    let mut init_u = T::zero();
    let mut init_v = T::zero();
    for c in 0..n {
        let [x, y] = pos[c];
        let psi0 = test_fn.value(x, y, T::zero());
        init_u += snaps[0].u.values()[c] * psi0;
        init_v += snaps[0].v.values()[c] * psi0;
    }
    lhs_u -= init_u * cv;
    lhs_v -= init_v * cv;

    Ok(((lhs_u - rhs_u).abs(), (lhs_v - rhs_v).abs()))
}
