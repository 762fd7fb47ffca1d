//! Semilinear systems `dX = (AX + G(X))dt + F(X)dW` with globally Lipschitz
//! nonlinearities: mild solver, well-posedness constants and the
//! observability threshold below which a perturbed observable system stays
//! observable.

mod constants;
mod kappa;
mod nonlinear;
mod solver;

pub use constants::{
    a_tau, delta_alpha, det_observability_constant, gronwall_upsilon, h_margin, theta_threshold, threshold_root,
    upsilon_from_bound, DetObservability, UPSILON_FORMULA,
};
pub use kappa::{
    estimate_kappa, observability_experiment, pair_stats, pair_study, sample_pairs, semilinear_bounds, BoundCheck,
    BoundsReport, KappaEstimate, ObservabilityExperiment, ObservabilityReport, PairStats, SE_BANDS, SLACK,
};
pub use nonlinear::{lipschitz_validate, LipschitzReport, Nonlinearity};
pub use solver::{solve_semilinear, SemilinearSpec, OVERFLOW_GUARD};
