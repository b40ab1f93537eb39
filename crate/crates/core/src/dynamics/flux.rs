//! Flux assembly for the cell equation.
//!
//! `lap(u*phi_eps(v))` is discretised in the expanded flux form
//!
//! ```text
//! F = phi_eps(v_face) * du/dn + u_donor * w,    w = phi'(v_face) * dv/dn
//! ```
//!
//! so the drift part can be upwinded. The divergence of `F` is added to `u_t`,
//! which transports mass *against* `w`; the donor cell is therefore the right
//! neighbour when `w > 0` and the left one otherwise. That orientation is what
//! makes the explicit step positivity-preserving under the CFL bound.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::motility::{MotilityFamily, MotilitySpec};
use crate::scalar::Scalar;

use super::PhysParams;

/// Infallible motility evaluation for the hot loops; domain checks are done
/// once per step on the field extrema.
pub(super) struct MotilityEval<'a, T: Scalar> {
    spec: &'a MotilitySpec<T>,
}

impl<'a, T: Scalar> MotilityEval<'a, T> {
    /// Validates that the motility is usable on the value range of `v`:
    /// with `eps = 0` the diffusion coefficient must stay away from zero.
    pub fn new(spec: &'a MotilitySpec<T>, v: &Field<T>, eps: T) -> Result<Self> {
        let vmin = v.min();
        let vmax = v.max();
        if !(vmin > T::zero()) {
            return Err(Error::Positivity(format!(
                "v must be positive, min = {vmin}"
            )));
        }
        if let MotilityFamily::Custom {
            domain_max: Some(m),
            ..
        } = &spec.family
        {
            if vmax > *m {
                return Err(Error::Domain(format!(
                    "v reaches {vmax}, outside the declared motility domain [0, {m}]"
                )));
            }
        }
        if eps == T::zero() {
            let floor = spec.phi(vmin)?;
            let cap = spec.phi(vmax)?.max(T::one());
            if !(floor > T::of(1e-14) * cap) {
                return Err(Error::Degeneracy(format!(
                    "phi({vmin}) = {floor} is not bounded away from zero on the observed v-range"
                )));
            }
        }
        Ok(MotilityEval { spec })
    }

    #[inline]
    pub fn phi(&self, s: T) -> T {
        match &self.spec.family {
            MotilityFamily::PowerLaw => {
                let a = self.spec.alpha;
                if a == T::one() {
                    s
                } else if a == T::of(2.0) {
                    s * s
                } else {
                    s.powf(a)
                }
            }
            MotilityFamily::Custom { phi, .. } => phi.eval(s).unwrap_or(T::nan()),
        }
    }

    #[inline]
    pub fn dphi(&self, s: T) -> T {
        match &self.spec.family {
            MotilityFamily::PowerLaw => {
                let a = self.spec.alpha;
                if a == T::one() {
                    T::one()
                } else if a == T::of(2.0) {
                    T::of(2.0) * s
                } else {
                    a * s.powf(a - T::one())
                }
            }
            MotilityFamily::Custom { dphi, .. } => dphi.eval(s).unwrap_or(T::nan()),
        }
    }
}

/// Discrete divergence of the cell fluxes; reaction terms are not included.
/// The total over the domain telescopes to zero (no-flux boundary).
pub fn u_rhs_flux_divergence<T: Scalar>(
    u: &Field<T>,
    v: &Field<T>,
    params: &PhysParams<T>,
    eps: T,
) -> Result<Field<T>> {
    if u.grid() != v.grid() {
        return Err(Error::Config("u and v must share a grid".into()));
    }
    if !(u.min() > T::zero()) {
        return Err(Error::Positivity(format!(
            "u must be positive, min = {}",
            u.min()
        )));
    }
    let eval = MotilityEval::new(&params.motility, v, eps)?;
    let mut out = vec![T::zero(); u.grid().total_cells()];
    add_flux_divergence(&mut out, u, v, &eval, eps);
    Field::new(u.grid().clone(), out)
}

/// Adds the flux divergence into `out` (which the stepper preloads with the
/// reaction and source terms).
pub(super) fn add_flux_divergence<T: Scalar>(
    out: &mut [T],
    u: &Field<T>,
    v: &Field<T>,
    eval: &MotilityEval<'_, T>,
    eps: T,
) {
    let g = u.grid();
    let half = T::of(0.5);
    let uv = u.values();
    let vv = v.values();
    match g.dim() {
        1 => {
            let n = g.cells()[0];
            let h = g.spacing()[0];
            let inv_h = T::one() / h;
            // sweep faces left to right carrying the previous face flux
            let mut f_left = T::zero();
            for i in 0..n {
                let f_right = if i + 1 == n {
                    T::zero()
                } else {
                    face_flux(uv[i], uv[i + 1], vv[i], vv[i + 1], half, inv_h, eval, eps)
                };
                out[i] += (f_right - f_left) * inv_h;
                f_left = f_right;
            }
        }
        _ => {
            let (nx, ny) = (g.cells()[0], g.cells()[1]);
            let (hx, hy) = (g.spacing()[0], g.spacing()[1]);
            let (inv_hx, inv_hy) = (T::one() / hx, T::one() / hy);
            for iy in 0..ny {
                let row = nx * iy;
                let mut f_left = T::zero();
                for ix in 0..nx {
                    let c = row + ix;
                    let f_right = if ix + 1 == nx {
                        T::zero()
                    } else {
                        face_flux(uv[c], uv[c + 1], vv[c], vv[c + 1], half, inv_hx, eval, eps)
                    };
                    out[c] += (f_right - f_left) * inv_hx;
                    f_left = f_right;
                }
            }
            for ix in 0..nx {
                let mut f_down = T::zero();
                for iy in 0..ny {
                    let c = ix + nx * iy;
                    let f_up = if iy + 1 == ny {
                        T::zero()
                    } else {
                        face_flux(
                            uv[c],
                            uv[c + nx],
                            vv[c],
                            vv[c + nx],
                            half,
                            inv_hy,
                            eval,
                            eps,
                        )
                    };
                    out[c] += (f_up - f_down) * inv_hy;
                    f_down = f_up;
                }
            }
        }
    }
}

/// Flux through the face between a left cell `(u_l, v_l)` and right cell
/// `(u_r, v_r)`, with the drift donor chosen upstream of the transport
/// direction `-w`.
#[inline]
fn face_flux<T: Scalar>(
    u_l: T,
    u_r: T,
    v_l: T,
    v_r: T,
    half: T,
    inv_h: T,
    eval: &MotilityEval<'_, T>,
    eps: T,
) -> T {
    let v_face = (v_l + v_r) * half;
    let du = (u_r - u_l) * inv_h;
    let dv = (v_r - v_l) * inv_h;
    let w = eval.dphi(v_face) * dv;
    let donor = if w > T::zero() { u_r } else { u_l };
    (eval.phi(v_face) + eps) * du + donor * w
}

/// Largest drift speed `|w|` over interior faces; the stepper's CFL bound
/// needs it.
pub(super) fn max_drift_speed<T: Scalar>(v: &Field<T>, eval: &MotilityEval<'_, T>) -> T {
    let g = v.grid();
    let half = T::of(0.5);
    let vv = v.values();
    let mut max_w = T::zero();
    match g.dim() {
        1 => {
            let inv_h = T::one() / g.spacing()[0];
            for i in 1..g.cells()[0] {
                let v_face = (vv[i - 1] + vv[i]) * half;
                let w = eval.dphi(v_face) * (vv[i] - vv[i - 1]) * inv_h;
                max_w = max_w.max(w.abs());
            }
        }
        _ => {
            let (nx, ny) = (g.cells()[0], g.cells()[1]);
            let inv_hx = T::one() / g.spacing()[0];
            let inv_hy = T::one() / g.spacing()[1];
            for iy in 0..ny {
                for ix in 1..nx {
                    let c = ix + nx * iy;
                    let v_face = (vv[c - 1] + vv[c]) * half;
                    let w = eval.dphi(v_face) * (vv[c] - vv[c - 1]) * inv_hx;
                    max_w = max_w.max(w.abs());
                }
            }
            for iy in 1..ny {
                for ix in 0..nx {
                    let c = ix + nx * iy;
                    let v_face = (vv[c - nx] + vv[c]) * half;
                    let w = eval.dphi(v_face) * (vv[c] - vv[c - nx]) * inv_hy;
                    max_w = max_w.max(w.abs());
                }
            }
        }
    }
    max_w
}
