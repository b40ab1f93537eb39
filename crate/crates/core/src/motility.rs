//! Signal-dependent motility: the function `phi`, its regularisation
//! `phi_eps(s) = phi(s) + eps`, and numerical verification of the structural
//! hypotheses the theory places on it (positive growth ratio near zero,
//! bounded derivative ratio, concavity of the alpha-th root).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::scalar::Scalar;

/// How `phi` is declared.
#[derive(Debug, Clone)]
pub enum MotilityFamily<T: Scalar> {
    /// Prototype `phi(s) = s^alpha`.
    PowerLaw,
    /// User-declared triple `(phi, phi', phi'')` as expressions in `s`.
    /// The derivatives are cross-validated, never inferred.
    Custom {
        phi: Expr,
        dphi: Expr,
        d2phi: Expr,
        /// Upper end of the declared domain; `None` means all of `[0, inf)`.
        domain_max: Option<T>,
    },
}

/// Motility declaration: family plus the exponent `alpha` of its behaviour
/// near zero, and optionally the endpoint `s0` of the concavity window.
#[derive(Debug, Clone)]
pub struct MotilitySpec<T: Scalar> {
    pub family: MotilityFamily<T>,
    pub alpha: T,
    pub s0: Option<T>,
}

/// Which hypothesis set to verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisMode {
    /// Smooth setting: `phi > 0` on `(0, inf)` plus the two ratio bounds.
    Classical,
    /// Weak setting: additionally `phi(0) = 0`, and for `alpha < 1/2` the
    /// concavity of `phi^{1/alpha}` on `(0, s0)`.
    Weak,
}

/// Geometric sample ladder `s = s_max * ratio^k` down to `s_min`.
#[derive(Debug, Clone)]
pub struct LadderConfig<T: Scalar> {
    pub s_max: T,
    pub s_min: T,
    pub ratio: T,
    /// Pass tolerance for the concavity check (float slack; the analytic
    /// statement is `<= 0`).
    pub concavity_tol: T,
    /// Floor standing in for "liminf > 0".
    pub liminf_floor: T,
    /// Cap standing in for "limsup < inf".
    pub limsup_cap: T,
}

impl<T: Scalar> Default for LadderConfig<T> {
    fn default() -> Self {
        LadderConfig {
            s_max: T::one(),
            s_min: T::of(1e-8),
            ratio: T::of(0.5),
            concavity_tol: T::of(1e-6),
            liminf_floor: T::of(1e-6),
            limsup_cap: T::of(1e6),
        }
    }
}

/// One verified hypothesis: the sample set, the extremal ratio observed on it,
/// and the verdict. Margins are signed distances to the pass threshold.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisEntry {
    pub id: String,
    pub samples: Vec<f64>,
    pub observed_extremal: f64,
    pub threshold: f64,
    pub passed: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub mode: String,
    pub alpha: f64,
    pub s0: Option<f64>,
    pub entries: Vec<HypothesisEntry>,
    pub passed_all: bool,
}

impl HypothesisReport {
    pub fn entry(&self, id: &str) -> Option<&HypothesisEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

impl<T: Scalar> MotilitySpec<T> {
    pub fn power_law(alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(MotilitySpec {
            family: MotilityFamily::PowerLaw,
            alpha,
            s0: None,
        })
    }

    pub fn power_law_with_s0(alpha: T, s0: T) -> Result<Self> {
        let mut spec = Self::power_law(alpha)?;
        if !(s0 > T::zero()) {
            return Err(Error::Config(format!("s0 must be positive, got {s0}")));
        }
        spec.s0 = Some(s0);
        Ok(spec)
    }

    pub fn custom(
        phi: Expr,
        dphi: Expr,
        d2phi: Expr,
        alpha: T,
        s0: Option<T>,
        domain_max: Option<T>,
    ) -> Result<Self> {
        if !(alpha > T::zero()) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if let Some(s0v) = s0 {
            if !(s0v > T::zero()) {
                return Err(Error::Config(format!("s0 must be positive, got {s0v}")));
            }
        }
        Ok(MotilitySpec {
            family: MotilityFamily::Custom {
                phi,
                dphi,
                d2phi,
                domain_max,
            },
            alpha,
            s0,
        })
    }

    fn check_domain(&self, s: T) -> Result<()> {
        if s < T::zero() || !s.is_finite() {
            return Err(Error::Domain(format!(
                "motility argument must satisfy s >= 0, got {s}"
            )));
        }
        if let MotilityFamily::Custom {
            domain_max: Some(m),
            ..
        } = &self.family
        {
            if s > *m {
                return Err(Error::Domain(format!(
                    "s = {s} outside declared motility domain [0, {m}]"
                )));
            }
        }
        Ok(())
    }

    /// `phi(s)` for `s >= 0`; the power law takes `0^alpha := 0`.
    pub fn phi(&self, s: T) -> Result<T> {
        self.check_domain(s)?;
        match &self.family {
            MotilityFamily::PowerLaw => Ok(pow_alpha(s, self.alpha)),
            MotilityFamily::Custom { phi, .. } => phi.eval(s),
        }
    }

    /// `phi_eps(s) = phi(s) + eps` with `eps` in `(0, 1)`.
    pub fn phi_eps(&self, eps: T, s: T) -> Result<T> {
        if !(eps > T::zero() && eps < T::one()) {
            return Err(Error::Config(format!("eps must lie in (0, 1), got {eps}")));
        }
        Ok(self.phi(s)? + eps)
    }

    /// `(phi'(s), phi''(s))` for `s > 0`; the derivatives may be singular at 0.
    pub fn derivatives(&self, s: T) -> Result<(T, T)> {
        if !(s > T::zero()) {
            return Err(Error::Domain(format!(
                "motility derivatives need s > 0, got {s}"
            )));
        }
        self.check_domain(s)?;
        match &self.family {
            MotilityFamily::PowerLaw => {
                let a = self.alpha;
                let one = T::one();
                if a == one {
                    return Ok((one, T::zero()));
                }
                if a == T::of(2.0) {
                    return Ok((T::of(2.0) * s, T::of(2.0)));
                }
                let d1 = a * s.powf(a - one);
                let d2 = a * (a - one) * s.powf(a - one - one);
                Ok((d1, d2))
            }
            MotilityFamily::Custom { dphi, d2phi, .. } => Ok((dphi.eval(s)?, d2phi.eval(s)?)),
        }
    }

    /// Second derivative of `phi^{1/alpha}` at `s > 0`, via the chain rule
    ///
    /// ```text
    /// (phi^{1/a})'' = (1/a) * phi^{1/a - 2} * [ phi*phi'' + (1/a - 1)*phi'^2 ]
    /// ```
    pub fn alpha_root_second_derivative(&self, s: T) -> Result<T> {
        if !(s > T::zero()) {
            return Err(Error::Domain(format!(
                "concavity check needs s > 0, got {s}"
            )));
        }
        let one = T::one();
        match &self.family {
            MotilityFamily::PowerLaw => {
                // phi = s^alpha makes phi^{1/alpha} = s: the bracket collapses
                // to (alpha*(alpha-1) + alpha*(1-alpha)) * s^(2*alpha-2), and
                // the coefficient is an exact floating-point zero.
                let a = self.alpha;
                let coeff = a * (a - one) + a * (one - a);
                Ok(coeff)
            }
            MotilityFamily::Custom { .. } => {
                let phi = self.phi(s)?;
                if !(phi > T::zero()) {
                    return Err(Error::Domain(format!(
                        "phi(s) must be positive for the concavity check, phi({s}) = {phi}"
                    )));
                }
                let (d1, d2) = self.derivatives(s)?;
                let inv_a = one / self.alpha;
                let bracket = phi * d2 + (inv_a - one) * d1 * d1;
                Ok(inv_a * phi.powf(inv_a - T::of(2.0)) * bracket)
            }
        }
    }

    /// Cross-validates declared derivatives of a custom spec against central
    /// finite differences of `phi` on a geometric sample of `[1e-4, 10]`
    /// (clipped to the declared domain). Power laws pass vacuously.
    pub fn verify_derivative_consistency(&self) -> Result<()> {
        let MotilityFamily::Custom { domain_max, .. } = &self.family else {
            return Ok(());
        };
        let hi = domain_max.map(|m| m * T::of(0.9)).unwrap_or(T::of(10.0));
        let lo = T::of(1e-4);
        if hi <= lo {
            return Err(Error::Config(
                "custom motility domain too small to cross-validate derivatives".into(),
            ));
        }
        let n = 21;
        let log_lo = lo.ln();
        let log_hi = hi.ln();
        for k in 0..n {
            let frac = T::of(k as f64 / (n - 1) as f64);
            let s = (log_lo + (log_hi - log_lo) * frac).exp();
            let (d1, d2) = self.derivatives(s)?;
            let phi = self.phi(s)?;

            let h1 = s * T::of(1e-5);
            let fd1 = (self.phi(s + h1)? - self.phi(s - h1)?) / (T::of(2.0) * h1);
            let scale1 = d1.abs() + (phi / s).abs() + T::of(1e-12);
            let rel1 = (fd1 - d1).abs() / scale1;
            if rel1 > T::of(1e-6) {
                return Err(Error::Consistency(format!(
                    "declared phi'({s}) = {d1} disagrees with finite difference {fd1} (relative error {rel1:e})"
                )));
            }

            let h2 = s * T::of(1e-4);
            let fd2 = (self.phi(s + h2)? - T::of(2.0) * phi + self.phi(s - h2)?) / (h2 * h2);
            let scale2 = d2.abs() + (d1 / s).abs() + (phi / (s * s)).abs() + T::of(1e-12);
            let rel2 = (fd2 - d2).abs() / scale2;
            if rel2 > T::of(1e-5) {
                return Err(Error::Consistency(format!(
                    "declared phi''({s}) = {d2} disagrees with finite difference {fd2} (relative error {rel2:e})"
                )));
            }
        }
        Ok(())
    }

    /// Verifies the structural hypotheses on the sample ladder and reports the
    /// extremal ratios with pass/fail verdicts.
    pub fn check_hypotheses(
        &self,
        mode: HypothesisMode,
        ladder: &LadderConfig<T>,
    ) -> Result<HypothesisReport> {
        if !(ladder.s_min <= T::of(1e-8)) {
            return Err(Error::Config(format!(
                "sample ladder must reach down to 1e-8, got s_min = {}",
                ladder.s_min
            )));
        }
        if !(ladder.ratio > T::zero() && ladder.ratio < T::one()) {
            return Err(Error::Config("ladder ratio must lie in (0, 1)".into()));
        }
        let half_alpha = self.alpha < T::of(0.5);
        if mode == HypothesisMode::Weak && half_alpha && self.s0.is_none() {
            return Err(Error::Config(
                "weak-mode hypothesis check with alpha < 1/2 requires s0".into(),
            ));
        }
        self.verify_derivative_consistency()?;

        let rungs = ladder_rungs(ladder);
        // "near zero" = rungs at or below the geometric midpoint of the ladder
        let midpoint = (ladder.s_min.ln() * T::of(0.5) + ladder.s_max.ln() * T::of(0.5)).exp();
        let tail: Vec<T> = rungs.iter().copied().filter(|&s| s <= midpoint).collect();

        let mut entries = Vec::new();
        let one = T::one();

        // phi > 0 on the sampled interior
        {
            let mut min_phi = T::infinity();
            for &s in &rungs {
                min_phi = min_phi.min(self.phi(s)?);
            }
            entries.push(entry(
                "phi-positive",
                &rungs,
                min_phi,
                T::zero(),
                min_phi > T::zero(),
                min_phi,
            ));
        }

        if mode == HypothesisMode::Weak {
            let phi0 = self.phi(T::zero())?;
            entries.push(entry(
                "phi-zero-at-origin",
                &[T::zero()],
                phi0,
                T::of(1e-12),
                phi0.abs() <= T::of(1e-12),
                T::of(1e-12) - phi0.abs(),
            ));
        }

        // liminf of phi(s)/s^alpha read off as the tail minimum
        {
            let mut min_ratio = T::infinity();
            for &s in &tail {
                min_ratio = min_ratio.min(self.phi(s)? / pow_alpha(s, self.alpha));
            }
            entries.push(entry(
                "phi-over-s-alpha-floor",
                &tail,
                min_ratio,
                ladder.liminf_floor,
                min_ratio >= ladder.liminf_floor,
                min_ratio - ladder.liminf_floor,
            ));
        }

        // limsup of |phi'(s)|/s^(alpha-1) read off as the tail maximum
        {
            let mut max_ratio = T::zero();
            for &s in &tail {
                let (d1, _) = self.derivatives(s)?;
                max_ratio = max_ratio.max(d1.abs() / s.powf(self.alpha - one));
            }
            entries.push(entry(
                "dphi-ratio-bounded",
                &tail,
                max_ratio,
                ladder.limsup_cap,
                max_ratio <= ladder.limsup_cap,
                ladder.limsup_cap - max_ratio,
            ));
        }

        // concavity of phi^{1/alpha} below s0, needed in the weak setting for
        // small alpha
        if mode == HypothesisMode::Weak && half_alpha {
            let s0 = self.s0.expect("checked above");
            let window: Vec<T> = rungs.iter().copied().filter(|&s| s < s0).collect();
            if window.is_empty() {
                return Err(Error::Config(
                    "no ladder rungs below s0; enlarge the ladder".into(),
                ));
            }
            let mut max_second = T::neg_infinity();
            for &s in &window {
                max_second = max_second.max(self.alpha_root_second_derivative(s)?);
            }
            entries.push(entry(
                "alpha-root-concave",
                &window,
                max_second,
                ladder.concavity_tol,
                max_second <= ladder.concavity_tol,
                ladder.concavity_tol - max_second,
            ));
        }

        let passed_all = entries.iter().all(|e| e.passed);
        Ok(HypothesisReport {
            mode: match mode {
                HypothesisMode::Classical => "classical".into(),
                HypothesisMode::Weak => "weak".into(),
            },
            alpha: self.alpha.as_f64(),
            s0: self.s0.map(|v| v.as_f64()),
            entries,
            passed_all,
        })
    }
}

/// `s^alpha` with `0^alpha := 0` for `alpha > 0`, plus fast paths for the
/// exponents the solver hits constantly.
fn pow_alpha<T: Scalar>(s: T, alpha: T) -> T {
    if alpha == T::one() {
        s
    } else if alpha == T::of(2.0) {
        s * s
    } else {
        s.powf(alpha)
    }
}

fn entry<T: Scalar>(
    id: &str,
    samples: &[T],
    observed: T,
    threshold: T,
    passed: bool,
    margin: T,
) -> HypothesisEntry {
    HypothesisEntry {
        id: id.to_string(),
        samples: samples.iter().map(|s| s.as_f64()).collect(),
        observed_extremal: observed.as_f64(),
        threshold: threshold.as_f64(),
        passed,
        margin: margin.as_f64(),
    }
}

fn ladder_rungs<T: Scalar>(ladder: &LadderConfig<T>) -> Vec<T> {
    let mut rungs = Vec::new();
    let cutoff = ladder.s_min * (T::one() - T::of(1e-12));
    let mut s = ladder.s_max;
    while s >= cutoff {
        rungs.push(s);
        s = s * ladder.ratio;
    }
    rungs
}
