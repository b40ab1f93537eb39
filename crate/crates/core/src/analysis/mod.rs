//! Constant arithmetic, regime classification, weak-form residual
//! verification, and convergence studies.

mod classify;
mod constants;
mod studies;
mod weak;

pub use classify::{classify_regime, ThresholdReport, Verdict};
pub use constants::{
    b_threshold, default_lambda_phi, eventual_decay_threshold, kappa1, kappa2,
    ode_comparison_bound, BThreshold,
};
pub use studies::{
    eps_convergence_study, mms_convergence, EpsStudy, MmsCase, MmsReport, ProblemSpec,
};
pub use weak::{weak_residual, TestFunction};
