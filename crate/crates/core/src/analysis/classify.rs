//! Regime classification: which global-existence guarantee the sufficiency
//! theory provides for a given parameter set. Verdicts report sufficiency
//! only; "no guarantee" never means blow-up.

use serde::Serialize;

use crate::dynamics::PhysParams;
use crate::error::Result;
use crate::motility::{HypothesisMode, LadderConfig};
use crate::scalar::Scalar;

use super::constants::{b_threshold, default_lambda_phi, kappa1, kappa2};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub guaranteed: bool,
    /// The sufficiency condition that fired, or why none applies.
    pub condition: String,
}

impl Verdict {
    fn yes(cond: &str) -> Self {
        Verdict {
            guaranteed: true,
            condition: cond.into(),
        }
    }

    fn no(cond: &str) -> Self {
        Verdict {
            guaranteed: false,
            condition: format!("no guarantee from the sufficiency conditions: {cond}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub n: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub v0_linf: f64,
    pub lambda_phi: f64,
    /// source of lambda_phi: "power-law default alpha^2" or "supplied"
    pub lambda_phi_provenance: String,
    pub kappa1_val: Option<f64>,
    pub kappa2_val: Option<f64>,
    pub b_threshold: f64,
    pub threshold_vacuous: bool,
    pub b_given: f64,
    pub classical_guarantee: Verdict,
    pub weak_guarantee: Verdict,
    pub eventual_smoothness: Verdict,
}

impl ThresholdReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Classifies a parameter set against the sufficiency conditions for
/// classical existence, weak existence, and eventual smoothness.
///
/// `lambda_phi` defaults to `alpha^2`, the constant the gradient estimate
/// yields for the power-law prototype; supply it explicitly for custom
/// motilities.
pub fn classify_regime<T: Scalar>(
    params: &PhysParams<T>,
    n: u32,
    v0_linf: T,
    lambda_phi: Option<T>,
) -> Result<ThresholdReport> {
    let alpha = params.motility.alpha;
    let gamma = params.gamma.as_f64();
    let lambda = lambda_phi.unwrap_or_else(|| default_lambda_phi(alpha));
    let provenance = if lambda_phi.is_some() {
        "supplied"
    } else {
        "power-law default alpha^2"
    };
    let threshold = b_threshold(n, alpha, v0_linf, lambda)?;
    let alpha_f = alpha.as_f64();
    let half = T::of(n as f64) * T::of(0.5);
    let (k1, k2) = if n >= 3 {
        (
            Some(kappa1(half, n)?.as_f64()),
            Some(kappa2(half, n)?.as_f64()),
        )
    } else {
        (None, None)
    };

    let quadratic = (gamma - 2.0).abs() < 1e-12;
    let superquadratic = gamma > 2.0 + 1e-12;
    let b = params.b;

    let classical = if alpha_f < 1.0 {
        Verdict::no("classical existence needs alpha >= 1")
    } else if superquadratic {
        Verdict::yes("superquadratic degradation (gamma > 2) with alpha >= 1")
    } else if quadratic && n <= 2 {
        Verdict::yes("quadratic degradation with any b > 0 in dimension n <= 2")
    } else if quadratic && b > T::of(threshold.value.as_f64()) {
        Verdict::yes("quadratic degradation with b above the explicit threshold")
    } else if quadratic {
        Verdict::no("quadratic degradation with b at or below the threshold in dimension n >= 3")
    } else {
        Verdict::no("degradation exponent below 2")
    };

    // weak existence is a quadratic-degradation result; the small-alpha branch
    // additionally needs the concavity window hypothesis
    let weak = if !quadratic {
        Verdict::no("weak existence is stated for gamma = 2")
    } else if alpha_f >= 0.5 {
        match params
            .motility
            .check_hypotheses(HypothesisMode::Weak, &LadderConfig::default())
        {
            Ok(rep) if rep.passed_all => {
                Verdict::yes("alpha >= 1/2 with the vanishing-motility hypotheses verified")
            }
            Ok(_) => Verdict::no("motility hypotheses failed on the sample ladder"),
            Err(e) => Verdict::no(&format!("motility hypotheses unverifiable: {e}")),
        }
    } else {
        match params
            .motility
            .check_hypotheses(HypothesisMode::Weak, &LadderConfig::default())
        {
            Ok(rep) if rep.passed_all => {
                Verdict::yes("alpha in (0, 1/2) with the concave-root window hypothesis verified")
            }
            Ok(rep) => {
                let failed: Vec<&str> = rep
                    .entries
                    .iter()
                    .filter(|e| !e.passed)
                    .map(|e| e.id.as_str())
                    .collect();
                Verdict::no(&format!("hypothesis checks failed: {}", failed.join(", ")))
            }
            Err(e) => Verdict::no(&format!("motility hypotheses unverifiable: {e}")),
        }
    };

    let eventual = if quadratic && alpha_f > 1.0 && n >= 3 {
        Verdict::yes("quadratic degradation with alpha > 1 in dimension n >= 3")
    } else if quadratic && alpha_f > 1.0 {
        Verdict::no("eventual smoothness is stated for n >= 3")
    } else {
        Verdict::no("eventual smoothness needs gamma = 2 and alpha > 1")
    };

    Ok(ThresholdReport {
        n,
        alpha: alpha_f,
        gamma,
        v0_linf: v0_linf.as_f64(),
        lambda_phi: lambda.as_f64(),
        lambda_phi_provenance: provenance.into(),
        kappa1_val: k1,
        kappa2_val: k2,
        b_threshold: threshold.value.as_f64(),
        threshold_vacuous: threshold.vacuous,
        b_given: params.b.as_f64(),
        classical_guarantee: classical,
        weak_guarantee: weak,
        eventual_smoothness: eventual,
    })
}
