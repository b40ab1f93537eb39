//! Spatially homogeneous reduction `u' = a*u - b*u^gamma`,
//! `v' = -u*v/(1 + eps*u)`, solved with an adaptive embedded Runge-Kutta pair
//! to oracle accuracy. Used as an independent reference for constant-data
//! runs.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::PhysParams;

/// Closed-form logistic solution for `gamma = 2`:
/// `u(t) = a*u0 / (b*u0 + (a - b*u0)*exp(-a*t))`.
pub fn logistic_closed_form<T: Scalar>(u0: T, a: T, b: T, t: T) -> T {
    a * u0 / (b * u0 + (a - b * u0) * (-a * t).exp())
}

/// Integrates the homogeneous system to time `t` with local tolerance 1e-12.
pub fn homogeneous_oracle<T: Scalar>(
    u0: T,
    v0: T,
    params: &PhysParams<T>,
    eps: T,
    t: T,
) -> Result<(T, T)> {
    if !(u0 > T::zero() && v0 > T::zero()) {
        return Err(Error::Domain(
            "homogeneous oracle needs positive initial values".into(),
        ));
    }
    if !(t >= T::zero()) {
        return Err(Error::Domain("homogeneous oracle needs t >= 0".into()));
    }
    let a = params.a;
    let b = params.b;
    let gamma = params.gamma;
    let f = |y: [T; 2]| -> [T; 2] {
        let du = a * y[0] - b * y[0].powf(gamma);
        let dv = -(y[0] * y[1]) / (T::one() + eps * y[0]);
        [du, dv]
    };
    let y = dopri5(f, [u0, v0], t)?;
    Ok((y[0], y[1]))
}

/// Dormand-Prince 5(4) with standard step control.
fn dopri5<T: Scalar>(f: impl Fn([T; 2]) -> [T; 2], y0: [T; 2], t_end: T) -> Result<[T; 2]> {
    if t_end == T::zero() {
        return Ok(y0);
    }
    let tol = T::of(1e-12);
    let c = |x: f64| T::of(x);

    let mut t = T::zero();
    let mut y = y0;
    let mut h = (t_end * c(1e-3)).min(c(0.1));
    let mut k1 = f(y);
    let mut steps = 0u64;

    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let stage = |y: &[T; 2], incs: &[(T, [T; 2])]| -> [T; 2] {
            let mut out = *y;
            for (coef, k) in incs {
                out[0] += h * *coef * k[0];
                out[1] += h * *coef * k[1];
            }
            out
        };

        let k2 = f(stage(&y, &[(c(1.0 / 5.0), k1)]));
        let k3 = f(stage(&y, &[(c(3.0 / 40.0), k1), (c(9.0 / 40.0), k2)]));
        let k4 = f(stage(
            &y,
            &[
                (c(44.0 / 45.0), k1),
                (c(-56.0 / 15.0), k2),
                (c(32.0 / 9.0), k3),
            ],
        ));
        let k5 = f(stage(
            &y,
            &[
                (c(19372.0 / 6561.0), k1),
                (c(-25360.0 / 2187.0), k2),
                (c(64448.0 / 6561.0), k3),
                (c(-212.0 / 729.0), k4),
            ],
        ));
        let k6 = f(stage(
            &y,
            &[
                (c(9017.0 / 3168.0), k1),
                (c(-355.0 / 33.0), k2),
                (c(46732.0 / 5247.0), k3),
                (c(49.0 / 176.0), k4),
                (c(-5103.0 / 18656.0), k5),
            ],
        ));
        let y5 = stage(
            &y,
            &[
                (c(35.0 / 384.0), k1),
                (c(500.0 / 1113.0), k3),
                (c(125.0 / 192.0), k4),
                (c(-2187.0 / 6784.0), k5),
                (c(11.0 / 84.0), k6),
            ],
        );
        let k7 = f(y5);
        let y4 = stage(
            &y,
            &[
                (c(5179.0 / 57600.0), k1),
                (c(7571.0 / 16695.0), k3),
                (c(393.0 / 640.0), k4),
                (c(-92097.0 / 339200.0), k5),
                (c(187.0 / 2100.0), k6),
                (c(1.0 / 40.0), k7),
            ],
        );

        let mut err = T::zero();
        for i in 0..2 {
            let scale = tol + tol * y[i].abs().max(y5[i].abs());
            let e = (y5[i] - y4[i]) / scale;
            err = err + e * e;
        }
        let err = (err * c(0.5)).sqrt();

        if err <= T::one() {
            t = t + h;
            y = y5;
            k1 = k7; // first-same-as-last
        }
        let factor = if err > T::zero() {
            (c(0.9) * err.powf(c(-0.2))).max(c(0.2)).min(c(5.0))
        } else {
            c(5.0)
        };
        h = h * factor;
        steps += 1;
        if steps > 10_000_000 {
            return Err(Error::Solver(
                "homogeneous oracle exceeded its step budget".into(),
            ));
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motility::MotilitySpec;
    use approx::assert_relative_eq;

    fn params(a: f64, b: f64, gamma: f64) -> PhysParams<f64> {
        PhysParams::new(a, b, gamma, MotilitySpec::power_law(1.0).unwrap()).unwrap()
    }

    #[test]
    fn logistic_equilibrium_is_fixed() {
        let p = params(1.0, 2.0, 2.0);
        let (u, _) = homogeneous_oracle(0.5, 1.0, &p, 0.0, 3.0).unwrap();
        assert_relative_eq!(u, 0.5, max_relative = 1e-11);
    }

    #[test]
    fn logistic_carrying_capacity_and_closed_form() {
        let p = params(1.0, 1.0, 2.0);
        // long-time limit is a/b = 1
        let (u, _) = homogeneous_oracle(2.0, 1.0, &p, 0.0, 40.0).unwrap();
        assert_relative_eq!(u, 1.0, max_relative = 1e-9);
        // u(1) = 2/(2 - e^{-1}) against the closed form
        let (u1, _) = homogeneous_oracle(2.0, 1.0, &p, 0.0, 1.0).unwrap();
        let exact = 2.0 / (2.0 - (-1.0f64).exp());
        assert_relative_eq!(u1, exact, max_relative = 1e-11);
        assert_relative_eq!(u1, 1.225399673560564, max_relative = 1e-11);
        assert_relative_eq!(
            logistic_closed_form(2.0, 1.0, 1.0, 1.0),
            exact,
            max_relative = 1e-15
        );
    }

    #[test]
    fn consumption_decay_with_constant_u() {
        // u0 = a/b keeps u fixed, so v(t) = v0 * exp(-u0 t / (1 + eps u0))
        let p = params(1.5, 3.0, 2.0);
        let u0: f64 = 0.5;
        for &eps in &[0.0, 0.1] {
            let (_, v) = homogeneous_oracle(u0, 2.0, &p, eps, 1.25).unwrap();
            let exact = 2.0 * (-u0 * 1.25 / (1.0 + eps * u0)).exp();
            assert_relative_eq!(v, exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn cubic_degradation_equilibrium() {
        // gamma = 3: equilibrium sqrt(a/b)
        let p = params(4.0, 1.0, 3.0);
        let (u, _) = homogeneous_oracle(0.3, 1.0, &p, 0.0, 30.0).unwrap();
        assert_relative_eq!(u, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let p = params(1.0, 1.0, 2.0);
        assert!(homogeneous_oracle(0.0, 1.0, &p, 0.0, 1.0).is_err());
        assert!(homogeneous_oracle(1.0, 1.0, &p, 0.0, -1.0).is_err());
    }
}
