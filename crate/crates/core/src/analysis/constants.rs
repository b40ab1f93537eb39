//! Closed-form constants of the boundedness theory, evaluated exactly as
//! written.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `kappa_1(p, n) = (p-1)^{(p+1)/p} (2p + sqrt(n))^{2/p} (2p-1)^{-1/p}`
pub fn kappa1<T: Scalar>(p: T, n: u32) -> Result<T> {
    check_pn(p, n)?;
    let one = T::one();
    let two = T::of(2.0);
    let sqrt_n = T::of(n as f64).sqrt();
    Ok((p - one).powf((p + one) / p)
        * (two * p + sqrt_n).powf(two / p)
        * (two * p - one).powf(-(one / p)))
}

/// `kappa_2(p, n) = 2^{3p+2} (2p + sqrt(n) + 1)^{2p} (2p - 2 + sqrt(n))^{p+1}
///                  / (2p-1)^p`
pub fn kappa2<T: Scalar>(p: T, n: u32) -> Result<T> {
    check_pn(p, n)?;
    let one = T::one();
    let two = T::of(2.0);
    let sqrt_n = T::of(n as f64).sqrt();
    Ok(two.powf(T::of(3.0) * p + two)
        * (two * p + sqrt_n + one).powf(two * p)
        * (two * p - two + sqrt_n).powf(p + one)
        / (two * p - one).powf(p))
}

fn check_pn<T: Scalar>(p: T, n: u32) -> Result<()> {
    if !(p > T::one()) {
        return Err(Error::Domain(format!(
            "kappa constants need p > 1, got {p}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("kappa constants need n >= 1".into()));
    }
    Ok(())
}

/// Default `lambda_phi` for the power-law prototype: the gradient-estimate
/// constant is `c2^2/c1` with `c1 = 1` and `c2 = alpha`, i.e. `alpha^2`.
pub fn default_lambda_phi<T: Scalar>(alpha: T) -> T {
    alpha * alpha
}

/// Explicit degradation threshold for quadratic degradation in dimension
/// `n >= 3`:
///
/// ```text
/// kappa1(n/2, n) * lambda_phi^{(n+2)/n} * v0_linf^{((n+2) alpha - 2)/n}
///   + kappa2(n/2, n) * v0_linf
/// ```
///
/// Vacuous for `n <= 2` (any `b > 0` suffices there).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BThreshold<T: Scalar> {
    pub value: T,
    pub vacuous: bool,
}

pub fn b_threshold<T: Scalar>(
    n: u32,
    alpha: T,
    v0_linf: T,
    lambda_phi: T,
) -> Result<BThreshold<T>> {
    if n == 0 {
        return Err(Error::Domain("b_threshold needs n >= 1".into()));
    }
    if !(v0_linf > T::zero()) || !(lambda_phi > T::zero()) {
        return Err(Error::Domain(
            "b_threshold needs positive v0_linf and lambda_phi".into(),
        ));
    }
    if n <= 2 {
        return Ok(BThreshold {
            value: T::zero(),
            vacuous: true,
        });
    }
    let p = T::of(n as f64) * T::of(0.5);
    let nn = T::of(n as f64);
    let exp_lambda = (nn + T::of(2.0)) / nn;
    let exp_v0 = ((nn + T::of(2.0)) * alpha - T::of(2.0)) / nn;
    let value = kappa1(p, n)? * lambda_phi.powf(exp_lambda) * v0_linf.powf(exp_v0)
        + kappa2(p, n)? * v0_linf;
    Ok(BThreshold {
        value,
        vacuous: false,
    })
}

/// Comparison bound for `y' + c1 y^kappa <= g(t) y` with unit-window integrals
/// of `g` bounded by `c2`:
///
/// `y(t) <= max(y(0) e^{c2}, (c1 (kappa-1))^{-1/(kappa-1)} e^{c2})`.
pub fn ode_comparison_bound<T: Scalar>(y0: T, c1: T, c2: T, kappa: T) -> Result<T> {
    if !(kappa > T::one()) {
        return Err(Error::Domain(format!(
            "ode comparison bound needs kappa > 1, got {kappa}"
        )));
    }
    if !(y0 > T::zero()) || !(c1 > T::zero()) || !(c2 >= T::zero()) {
        return Err(Error::Domain(
            "ode comparison bound needs y0 > 0, c1 > 0, c2 >= 0".into(),
        ));
    }
    let one = T::one();
    let ec2 = c2.exp();
    let second = (c1 * (kappa - one)).powf(-(one / (kappa - one))) * ec2;
    Ok((y0 * ec2).max(second))
}

/// Largest `delta > 0` with
/// `kappa1(p,n) lambda^{(p+1)/p} delta^{(alpha(p+1)-1)/p} + kappa2(p,n) delta <= b`,
/// found by bisection. Once the signal sup norm decays below this level, the
/// quasi-energy argument closes for the exponent `p` and the solution gains
/// eventual `L^p` bounds.
pub fn eventual_decay_threshold<T: Scalar>(
    p: T,
    n: u32,
    alpha: T,
    lambda_phi: T,
    b: T,
) -> Result<T> {
    if !(b > T::zero()) {
        return Err(Error::Domain("eventual decay threshold needs b > 0".into()));
    }
    if !(alpha > T::zero()) {
        return Err(Error::Domain(
            "eventual decay threshold needs alpha > 0".into(),
        ));
    }
    let k1 = kappa1(p, n)?;
    let k2 = kappa2(p, n)?;
    let one = T::one();
    let exp_delta = (alpha * (p + one) - one) / p;
    if !(exp_delta > T::zero()) {
        return Err(Error::Domain(format!(
            "delta exponent (alpha(p+1)-1)/p = {exp_delta} must be positive"
        )));
    }
    let lhs = |delta: T| k1 * lambda_phi.powf((p + one) / p) * delta.powf(exp_delta) + k2 * delta;
    // lhs is strictly increasing with lhs(b/k2) >= b
    let mut lo = T::zero();
    let mut hi = b / k2;
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if lhs(mid) <= b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
