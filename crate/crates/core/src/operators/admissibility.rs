use super::generator::{Generator, Repr};
use super::ops::{ControlOp, Coupling, ObservationOp};
use crate::error::{Error, Result};
use crate::linalg::{self, c, exp_integral, CMatrix, C64};

/// `∫_0^α e^{z t} dt`.
fn kernel(z: C64, alpha: f64) -> C64 {
    exp_integral(z, alpha)
}

/// Observability Gramian `∫_0^α T(t)^* C^*C T(t) dt`.
pub fn observability_gramian(gen: &Generator, cop: &ObservationOp, alpha: f64) -> Result<CMatrix> {
    cop.validate_for(gen)?;
    let cm = cop.to_matrix();
    let q = cm.adjoint() * &cm;
    gramian(gen, &q, alpha, false)
}

/// Controllability Gramian `∫_0^τ T(t) B B^* T(t)^* dt`.
pub fn controllability_gramian(gen: &Generator, bop: &ControlOp, tau: f64) -> Result<CMatrix> {
    bop.validate_for(gen)?;
    let bm = bop.to_matrix();
    let q = &bm * bm.adjoint();
    gramian(gen, &q, tau, true)
}

fn gramian(gen: &Generator, q: &CMatrix, horizon: f64, control: bool) -> Result<CMatrix> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    match gen.repr() {
        Repr::Diagonal(e) => Ok(CMatrix::from_fn(e.len(), e.len(), |j, k| {
            if q[(j, k)] == linalg::ZERO {
                return linalg::ZERO;
            }
            let z = if control { e[j] + e[k].conj() } else { e[j].conj() + e[k] };
            q[(j, k)] * kernel(z, horizon)
        })),
        Repr::Dense(a) => {
            let a = if control { a.adjoint() } else { a.clone() };
            Ok(linalg::gramian_quadrature(&a, q, horizon))
        }
        Repr::ShiftGrid { .. } => Err(Error::Unsupported("Gramians of shift-grid generators")),
    }
}

/// Dyadic growth test on leading-prefix suprema: the increment over `(K/2, K]`
/// fails to shrink relative to the one over `(K/4, K/2]`.
fn keeps_growing(k: usize, top: impl Fn(usize) -> f64) -> bool {
    if k < 8 {
        return false;
    }
    let (q, h, f) = (top(k / 4), top(k / 2), top(k));
    let (d1, d2) = (h - q, f - h);
    d2 > 1e-9 * f && d2 >= super::ops::TAIL_RATIO * d1
}

/// Largest eigenvalue of a Gramian, `+∞` when leading sub-blocks keep growing.
fn gramian_sup(g: &CMatrix, modal: bool) -> f64 {
    let top = |n: usize| linalg::hermitian_extremes(&g.view((0, 0), (n, n)).into_owned()).1.max(0.0);
    if modal && keeps_growing(g.nrows(), top) {
        return f64::INFINITY;
    }
    top(g.nrows())
}

/// `γ` with `∫_0^α ‖C T(t) x‖² dt ≤ γ² ‖x‖²`, or `+∞` when the growth test fails.
pub fn obs_admissibility_constant(gen: &Generator, cop: &ObservationOp, alpha: f64) -> Result<f64> {
    cop.validate_for(gen)?;
    if cop.is_zero() {
        return Ok(0.0);
    }
    match (gen.repr(), cop) {
        (Repr::Diagonal(e), ObservationOp::Modal { coeffs, coupling: Coupling::Diagonal }) => {
            if !(alpha > 0.0) {
                return Err(Error::InvalidParameter(format!("horizon must be positive, got {alpha}")));
            }
            let vals: Vec<f64> = e
                .iter()
                .zip(coeffs)
                .map(|(l, ck)| ck.norm_sqr() * kernel(c(2.0 * l.re), alpha).re)
                .collect();
            let top = |n: usize| vals[..n].iter().copied().fold(0.0, f64::max);
            if keeps_growing(vals.len(), top) {
                return Ok(f64::INFINITY);
            }
            Ok(vals.iter().copied().fold(0.0, f64::max).sqrt())
        }
        (_, op) => {
            let g = observability_gramian(gen, op, alpha)?;
            Ok(gramian_sup(&g, matches!(op, ObservationOp::Modal { .. })).sqrt())
        }
    }
}

/// Outcome of the control admissibility test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CtrlAdmissibility {
    /// `‖Φ_τ‖`, infinite when the growth test fails.
    pub norm: f64,
    pub admissible: bool,
}

pub fn ctrl_admissibility_check(gen: &Generator, bop: &ControlOp, tau: f64) -> Result<CtrlAdmissibility> {
    let g = controllability_gramian(gen, bop, tau)?;
    if bop.is_zero() {
        return Ok(CtrlAdmissibility { norm: 0.0, admissible: true });
    }
    let sup = gramian_sup(&g, matches!(bop, ControlOp::Modal { .. }));
    Ok(CtrlAdmissibility { norm: sup.sqrt(), admissible: sup.is_finite() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVector;
    use crate::operators::io::output_map;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scalar_h(l: f64, a: f64) -> f64 {
        ((2.0 * l * a).exp() - 1.0) / (2.0 * l)
    }

    #[test]
    fn heat_with_linear_profile_has_closed_form_sup() {
        let gen = Generator::heat(64);
        let cop = ObservationOp::diagonal_profile(64, |k| k);
        let oracle = (1..=64).map(|k| (k * k) as f64 * scalar_h(-((k * k) as f64), 1.0)).fold(0.0, f64::max);
        let g = obs_admissibility_constant(&gen, &cop, 1.0).unwrap();
        assert_relative_eq!(g * g, oracle, epsilon = 1e-14);
        assert_relative_eq!(g, 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn zero_operator_and_scalar_mode() {
        let gen = Generator::from_real_spectrum(&[-1.0]).unwrap();
        assert_eq!(obs_admissibility_constant(&gen, &ObservationOp::diagonal_real(&[0.0]), 1.0).unwrap(), 0.0);
        let g = obs_admissibility_constant(&gen, &ObservationOp::diagonal_real(&[1.0]), 1.0).unwrap();
        assert_relative_eq!(g * g, scalar_h(-1.0, 1.0), epsilon = 1e-15);
        assert_relative_eq!(g * g, 0.432332, epsilon = 1e-6);
    }

    #[test]
    fn marginal_mode_uses_limit() {
        let gen = Generator::from_real_spectrum(&[0.0]).unwrap();
        let g = obs_admissibility_constant(&gen, &ObservationOp::diagonal_real(&[2.0]), 1.5).unwrap();
        assert_relative_eq!(g * g, 1.5 * 4.0, epsilon = 1e-14);
    }

    #[test]
    fn growing_sup_is_flagged() {
        let gen = Generator::heat(64);
        let cop = ObservationOp::diagonal_profile(64, |k| k * k);
        assert!(obs_admissibility_constant(&gen, &cop, 1.0).unwrap().is_infinite());
        let lumped = ObservationOp::lumped_profile(64, |k| k);
        assert!(obs_admissibility_constant(&gen, &lumped, 1.0).unwrap().is_infinite());
        let mild = ObservationOp::lumped_profile(64, |k| k.powf(0.25));
        assert!(obs_admissibility_constant(&gen, &mild, 1.0).unwrap().is_finite());
    }

    #[test]
    fn control_norms() {
        let gen = Generator::from_real_spectrum(&[-1.0]).unwrap();
        let r = ctrl_admissibility_check(&gen, &ControlOp::lumped_real(&[0.0]), 1.0).unwrap();
        assert_eq!(r.norm, 0.0);
        let r = ctrl_admissibility_check(&gen, &ControlOp::lumped_real(&[1.0]), 1.0).unwrap();
        assert_relative_eq!(r.norm, scalar_h(-1.0, 1.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r.norm, 0.657519, epsilon = 1e-6);
        let heat = Generator::heat(64);
        let r = ctrl_admissibility_check(&heat, &ControlOp::diagonal_profile(64, |k| k), 1.0).unwrap();
        assert!(r.admissible);
        assert!(r.norm * r.norm <= 0.5 + 1e-12);
    }

    #[test]
    fn dense_gramian_matches_diagonal_closed_form() {
        let diag = Generator::from_real_spectrum(&[-1.0, -2.0]).unwrap();
        let dense = Generator::dense_auto(crate::linalg::real_matrix(&[&[-1.0, 0.0], &[0.0, -2.0]])).unwrap();
        let cop = ObservationOp::Dense(crate::linalg::real_matrix(&[&[1.0, 1.0]]));
        let gd = observability_gramian(&diag, &cop, 1.0).unwrap();
        let gq = observability_gramian(&dense, &cop, 1.0).unwrap();
        assert!((gd - gq).norm() < 1e-9);
    }

    #[test]
    fn duality_on_self_adjoint_generators() {
        let gen = Generator::heat(32);
        let profile = |k: f64| k.powf(0.7);
        let g = obs_admissibility_constant(&gen, &ObservationOp::diagonal_profile(32, profile), 2.0).unwrap();
        let r = ctrl_admissibility_check(&gen, &ControlOp::diagonal_profile(32, profile), 2.0).unwrap();
        assert_relative_eq!(g, r.norm, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn constant_bounds_discrete_output_energy(
            re in prop::collection::vec(-0.3f64..0.3, 16),
            im in prop::collection::vec(-0.3f64..0.3, 16),
        ) {
            let gen = Generator::heat(16);
            let cop = ObservationOp::diagonal_profile(16, |k| k);
            let g = obs_admissibility_constant(&gen, &cop, 1.0).unwrap();
            // Decaying coefficients keep the state inside the domain of the unbounded profile.
            let x = CVector::from_fn(16, |i, _| C64::new(1.0 + re[i], im[i]) / c(((i + 1) as f64).powf(2.5)));
            prop_assume!(x.norm() > 1e-3);
            let x = &x / c(x.norm());
            let y = output_map(&gen, &cop, &x, 1.0, 1e-3).unwrap();
            prop_assert!(y.l2_norm_sq() <= g * g * (1.0 + 1e-3));
        }
    }
}
