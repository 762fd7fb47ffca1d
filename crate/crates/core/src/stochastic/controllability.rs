use super::sde::LinearSystemSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::operators::controllability_gramian;

#[derive(Clone, Debug, PartialEq)]
pub struct ControllabilityReport {
    pub gramian: CMatrix,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub tolerance: f64,
    pub controllable: bool,
}

/// Surjectivity of the deterministic input map on `[0, τ]`, read off the
/// smallest singular value of the controllability Gramian. This is a
/// sufficient condition for exact controllability of the stochastic system.
pub fn exact_controllability_test(spec: &LinearSystemSpec, tau: f64) -> Result<ControllabilityReport> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {tau}")));
    }
    let gramian = controllability_gramian(&spec.gen, &spec.b, tau)?;
    // Hermitian positive semidefinite: singular values are eigenvalues.
    let (lo, hi) = linalg::hermitian_extremes(&gramian);
    let sigma_min = lo.max(0.0);
    let tolerance = 1e-10 * hi.max(1.0);
    Ok(ControllabilityReport { gramian, sigma_min, sigma_max: hi, tolerance, controllable: sigma_min > tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_matrix};
    use crate::operators::{ControlOp, Generator, ObservationOp};
    use crate::stochastic::NoiseOp;
    use approx::assert_relative_eq;

    fn two_mode(l2: f64, b: [f64; 2]) -> LinearSystemSpec {
        LinearSystemSpec::new(
            Generator::from_real_spectrum(&[-1.0, l2]).unwrap(),
            ControlOp::lumped_real(&b),
            ObservationOp::identity(2),
            NoiseOp::zero(2),
        )
        .unwrap()
    }

    #[test]
    fn two_mode_gramian_against_quadrature_eigen_oracle() {
        let r = exact_controllability_test(&two_mode(-2.0, [1.0, 1.0]), 1.0).unwrap();
        // Quadrature Gramian through the dense route, eigenvalues in closed form.
        let a = real_matrix(&[&[-1.0, 0.0], &[0.0, -2.0]]);
        let q = real_matrix(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let g = linalg::gramian_quadrature(&a, &q, 1.0);
        let (p, s, d) = (g[(0, 0)].re, g[(0, 1)].re, g[(1, 1)].re);
        let lo = 0.5 * (p + d) - (0.25 * (p - d).powi(2) + s * s).sqrt();
        assert_relative_eq!(r.sigma_min, lo, max_relative = 0.01);
        assert!((r.sigma_min - 8.7e-3).abs() < 1e-4);
        assert!((r.gramian[(0, 1)] - c(0.3167)).norm() < 1e-4);
        assert!(r.controllable);
    }

    #[test]
    fn rank_deficient_cases() {
        let repeated = exact_controllability_test(&two_mode(-1.0, [1.0, 1.0]), 1.0).unwrap();
        assert!(repeated.sigma_min <= 1e-12 && !repeated.controllable);
        let zero = exact_controllability_test(&two_mode(-2.0, [0.0, 0.0]), 1.0).unwrap();
        assert_eq!(zero.sigma_min, 0.0);
        assert!(!zero.controllable);
    }
}
