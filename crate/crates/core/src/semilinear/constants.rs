use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::{c, CVector};
use crate::operators::{observability_gramian, Generator, ObservationOp};

/// Version tag of the closed-form Gronwall constant, stamped into reports.
pub const UPSILON_FORMULA: &str = "upsilon-v1: 3M^2 e^{2|d|a} exp(3M^2 e^{2|d|a} L^2 (a+1) a)";

/// `υ` from a semigroup bound `‖T(t)‖ ≤ M e^{δt}`.
pub fn upsilon_from_bound(m: f64, delta: f64, l: f64, alpha: f64) -> f64 {
    let pre = 3.0 * m * m * (2.0 * delta.abs() * alpha).exp();
    pre * (pre * l * l * (alpha + 1.0) * alpha).exp()
}

/// Mean-square data-to-state constant on `[0, α]`.
pub fn gronwall_upsilon(gen: &Generator, l: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {alpha}")));
    }
    let (m, delta) = gen.semigroup_bound(alpha);
    Ok(upsilon_from_bound(m, delta, l, alpha))
}

/// Output well-posedness constant `γ √(3(1 + υ L²(α² + α)))`.
pub fn delta_alpha(gamma: f64, upsilon: f64, l: f64, alpha: f64) -> f64 {
    gamma * (3.0 * (1.0 + upsilon * l * l * (alpha * alpha + alpha))).sqrt()
}

/// `γ √(2υ(τ² + τ))`.
pub fn a_tau(gamma: f64, upsilon: f64, tau: f64) -> f64 {
    gamma * (2.0 * upsilon * (tau * tau + tau)).sqrt()
}

/// `δ² - a² L²`.
pub fn h_margin(delta_det: f64, a: f64, l: f64) -> f64 {
    delta_det * delta_det - a * a * l * l
}

/// `δ/a`, or `+∞` when `a = 0`.
pub fn theta_threshold(delta_det: f64, a: f64) -> f64 {
    if a == 0.0 {
        f64::INFINITY
    } else {
        delta_det / a
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetObservability {
    pub value: f64,
    pub observable: bool,
    /// Unit eigenvector of the smallest Gramian eigenvalue.
    pub weakest: CVector,
}

/// Square root of the smallest eigenvalue of the observability Gramian on `[0, τ]`.
pub fn det_observability_constant(gen: &Generator, obs: &ObservationOp, tau: f64) -> Result<DetObservability> {
    let g = observability_gramian(gen, obs, tau)?;
    let eig = SymmetricEigen::new((&g + g.adjoint()) * c(0.5));
    let (i, lo) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (j, v)| if v < acc.1 { (j, v) } else { acc });
    let hi = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let observable = lo > 1e-13 * hi.max(f64::MIN_POSITIVE);
    Ok(DetObservability {
        value: if observable { lo.sqrt() } else { 0.0 },
        observable,
        weakest: eig.eigenvectors.column(i).into_owned(),
    })
}

/// Root `Θ̂` of `L ↦ δ_det - a_τ(L) L`, where `a_τ` carries the `L`-dependent `υ_τ`.
pub fn threshold_root(gen: &Generator, obs: &ObservationOp, tau: f64) -> Result<f64> {
    let delta_det = det_observability_constant(gen, obs, tau)?.value;
    let gamma = crate::operators::obs_admissibility_constant(gen, obs, tau)?;
    if delta_det == 0.0 {
        return Ok(0.0);
    }
    if gamma == 0.0 {
        return Ok(f64::INFINITY);
    }
    let (m, d) = gen.semigroup_bound(tau);
    let gap = |l: f64| delta_det - a_tau(gamma, upsilon_from_bound(m, d, l, tau), tau) * l;
    let mut hi = delta_det / a_tau(gamma, upsilon_from_bound(m, d, 0.0, tau), tau);
    while gap(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use proptest::prelude::*;

    fn diag() -> Generator {
        Generator::from_real_spectrum(&[-1.0, -2.0]).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert_eq!(upsilon_from_bound(1.0, 0.0, 0.0, 2.0), 3.0);
        assert_eq!(delta_alpha(1.0, 1.0, 1.0, 1.0), 3.0);
        assert_eq!(delta_alpha(2.0, 5.0, 0.0, 1.0), 2.0 * 3f64.sqrt());
        assert_eq!(a_tau(1.0, 1.0, 1.0), 2.0);
        assert_eq!(a_tau(1.0, 1.0, 0.0), 0.0);
        assert_eq!(theta_threshold(0.5, 2.0), 0.25);
        assert_eq!(theta_threshold(0.0, 2.0), 0.0);
        assert_eq!(theta_threshold(0.5, 0.0), f64::INFINITY);
        assert_eq!(h_margin(0.5, 2.0, theta_threshold(0.5, 2.0)), 0.0);
    }

    #[test]
    fn two_mode_gramian_minimum() {
        let d = det_observability_constant(&diag(), &ObservationOp::identity(2), 1.0).unwrap();
        let oracle = ((1.0 - (-4f64).exp()) / 4.0).sqrt();
        assert!((d.value - oracle).abs() < 1e-12);
        assert!((d.value - 0.495400).abs() < 1e-6);
        assert!(d.observable);
        assert!((d.weakest[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unobserved_modes_give_zero() {
        let zero = ObservationOp::diagonal(vec![C64::new(0.0, 0.0); 2]);
        let d = det_observability_constant(&diag(), &zero, 1.0).unwrap();
        assert!(!d.observable && d.value == 0.0);
        let one = ObservationOp::diagonal_real(&[1.0, 0.0]);
        let d = det_observability_constant(&diag(), &one, 1.0).unwrap();
        assert!(!d.observable && d.value == 0.0);
    }

    #[test]
    fn threshold_root_cancels_the_margin() {
        let (g, c) = (diag(), ObservationOp::identity(2));
        let theta = threshold_root(&g, &c, 1.0).unwrap();
        let gamma = crate::operators::obs_admissibility_constant(&g, &c, 1.0).unwrap();
        let ups = gronwall_upsilon(&g, theta, 1.0).unwrap();
        let delta = det_observability_constant(&g, &c, 1.0).unwrap().value;
        let a = a_tau(gamma, ups, 1.0);
        assert!(h_margin(delta, a, theta).abs() < 1e-12);
        assert!((theta_threshold(delta, a) - theta).abs() < 1e-12);
        assert!((theta - 0.0715).abs() < 5e-4, "{theta}");
    }

    #[test]
    fn calculators_are_bitwise_deterministic() {
        let (g, c) = (diag(), ObservationOp::identity(2));
        assert_eq!(threshold_root(&g, &c, 1.0).unwrap().to_bits(), threshold_root(&g, &c, 1.0).unwrap().to_bits());
    }

    proptest! {
        #[test]
        fn upsilon_is_monotone(m in 1.0f64..3.0, d in -2.0f64..2.0, l in 0.0f64..1.0, a in 0.01f64..2.0, dl in 0.0f64..0.5, da in 0.0f64..0.5) {
            let base = upsilon_from_bound(m, d, l, a);
            prop_assert!(upsilon_from_bound(m, d, l + dl, a) >= base);
            prop_assert!(upsilon_from_bound(m, d, l, a + da) >= base);
        }

        #[test]
        fn margin_decreases_in_l(delta in 0.1f64..2.0, a in 0.1f64..5.0, l in 0.0f64..1.0, dl in 1e-3f64..1.0) {
            prop_assert!(h_margin(delta, a, l + dl) < h_margin(delta, a, l));
        }
    }
}
