use super::generator::{Generator, StateVector};
use super::ops::{ControlOp, ObservationOp};
use super::signal::{node_index, steps_for, GridSignal};
use crate::error::{Error, Result};
use crate::linalg::CVector;

/// `Φ̃_t u = ∫_0^t T_{-1}(t-s) B u(s) ds` with `u` held constant on each cell.
pub fn extrapolated_convolution(gen: &Generator, bop: &ControlOp, u: &GridSignal, t: f64) -> Result<StateVector> {
    bop.validate_for(gen)?;
    check_input(bop, u)?;
    let n = node_index(u.dt(), t, u.steps())?;
    let prop = gen.propagator(u.dt())?;
    let mut z = CVector::zeros(gen.dim());
    for k in 0..n {
        z = prop.apply(&z) + prop.apply_phi1(&bop.apply(u.at(k)));
    }
    Ok(z)
}

/// All nodes of the input map up to the end of `u`.
pub fn input_trajectory(gen: &Generator, bop: &ControlOp, u: &GridSignal) -> Result<Vec<StateVector>> {
    bop.validate_for(gen)?;
    check_input(bop, u)?;
    let prop = gen.propagator(u.dt())?;
    let mut z = CVector::zeros(gen.dim());
    let mut out = Vec::with_capacity(u.steps() + 1);
    out.push(z.clone());
    for k in 0..u.steps() {
        z = prop.apply(&z) + prop.apply_phi1(&bop.apply(u.at(k)));
        out.push(z.clone());
    }
    Ok(out)
}

fn check_input(bop: &ControlOp, u: &GridSignal) -> Result<()> {
    if u.dim() != bop.input_dim() {
        return Err(Error::DimensionMismatch { context: "input signal", expected: bop.input_dim(), found: u.dim() });
    }
    Ok(())
}

/// `(Ψx)(t_n) = C T(t_n) x` on `[0, α]`.
pub fn output_map(gen: &Generator, cop: &ObservationOp, x: &StateVector, alpha: f64, dt: f64) -> Result<GridSignal> {
    cop.validate_for(gen)?;
    let steps = steps_for(alpha, dt)?;
    let mut values = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        let xn = gen.semigroup_apply(n as f64 * dt, x)?;
        values.push(cop.apply_checked(&xn, n, None)?);
    }
    GridSignal::new(dt, values)
}

/// Input/output map `(𝔽u)(t_n) = C_Λ Φ̃_{t_n} u` on `[0, α]`.
pub fn io_map(gen: &Generator, bop: &ControlOp, cop: &ObservationOp, u: &GridSignal, alpha: f64, dt: f64) -> Result<GridSignal> {
    cop.validate_for(gen)?;
    if (u.dt() - dt).abs() > 1e-15 * dt {
        return Err(Error::GridMismatch(format!("input step {} differs from {dt}", u.dt())));
    }
    let steps = steps_for(alpha, dt)?;
    if u.steps() < steps {
        return Err(Error::GridMismatch(format!("input has {} steps, horizon needs {steps}", u.steps())));
    }
    let states = input_trajectory(gen, bop, &u.truncated(steps))?;
    let values = states
        .iter()
        .enumerate()
        .map(|(n, z)| cop.apply_checked(z, n, None))
        .collect::<Result<Vec<_>>>()?;
    GridSignal::new(dt, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_vector};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scalar() -> (Generator, ControlOp, ObservationOp) {
        (
            Generator::from_real_spectrum(&[-1.0]).unwrap(),
            ControlOp::lumped_real(&[1.0]),
            ObservationOp::lumped_real(&[1.0]),
        )
    }

    #[test]
    fn marginal_mode_integrates_time() {
        let gen = Generator::from_real_spectrum(&[0.0]).unwrap();
        let u = GridSignal::constant(0.01, 150, &[1.0]);
        let z = extrapolated_convolution(&gen, &ControlOp::lumped_real(&[1.0]), &u, 1.5).unwrap();
        assert_relative_eq!(z[0].re, 1.5, epsilon = 1e-13);
    }

    #[test]
    fn stable_mode_matches_exact_integral() {
        let (gen, b, _) = scalar();
        let u = GridSignal::constant(0.01, 100, &[1.0]);
        let z = extrapolated_convolution(&gen, &b, &u, 1.0).unwrap();
        assert_relative_eq!(z[0].re, 1.0 - (-1.0f64).exp(), epsilon = 1e-13);
        assert_relative_eq!(z[0].re, 0.632121, epsilon = 1e-6);
        let zero = extrapolated_convolution(&gen, &b, &GridSignal::zeros(0.01, 100, 1), 1.0).unwrap();
        assert_eq!(zero[0].norm(), 0.0);
    }

    #[test]
    fn output_map_cases() {
        let (gen, _, cop) = scalar();
        let y = output_map(&gen, &cop, &real_vector(&[1.0]), 1.0, 1e-3).unwrap();
        assert_relative_eq!(y.l2_norm_sq(), (1.0 - (-2.0f64).exp()) / 2.0, epsilon = 1e-6);
        let y0 = output_map(&gen, &cop, &real_vector(&[0.0]), 1.0, 1e-3).unwrap();
        assert_eq!(y0.l2_norm_sq(), 0.0);

        let heat = Generator::from_real_spectrum(&[-1.0, -4.0]).unwrap();
        let ident = ObservationOp::diagonal_real(&[1.0, 1.0]);
        let y = output_map(&heat, &ident, &real_vector(&[0.0, 1.0]), 1.0, 0.1).unwrap();
        for (n, v) in y.values().iter().enumerate() {
            assert_relative_eq!(v[1].re, (-4.0 * n as f64 * 0.1).exp(), epsilon = 1e-14);
            assert_eq!(v[0].norm(), 0.0);
        }
    }

    #[test]
    fn output_map_rejects_states_outside_the_domain() {
        let gen = Generator::heat(64);
        let cop = ObservationOp::lumped_profile(64, |k| k);
        let x = crate::linalg::CVector::from_fn(64, |i, _| c(1.0 / (i + 1) as f64));
        assert!(matches!(output_map(&gen, &cop, &x, 1.0, 0.1), Err(Error::DomainViolation { node: 0, .. })));
    }

    #[test]
    fn scalar_io_map() {
        let (gen, b, cop) = scalar();
        let u = GridSignal::constant(1e-3, 1000, &[1.0]);
        let y = io_map(&gen, &b, &cop, &u, 1.0, 1e-3).unwrap();
        for (n, v) in y.values().iter().enumerate() {
            assert_relative_eq!(v[0].re, 1.0 - (-(n as f64) * 1e-3).exp(), epsilon = 1e-12);
        }
        let y0 = io_map(&gen, &b, &cop, &GridSignal::zeros(1e-3, 1000, 1), 1.0, 1e-3).unwrap();
        assert_eq!(y0.l2_norm_sq(), 0.0);
    }

    #[test]
    fn shift_composition() {
        let gen = Generator::heat(8);
        let b = ControlOp::lumped_profile(8, |k| k.sqrt());
        let cop = ObservationOp::lumped_profile(8, |k| 1.0 / k);
        let dt = 0.01;
        let u = GridSignal::from_fn(dt, 200, 1, |t| vec![(3.0 * t).sin() + t]);
        let m = 70;
        let tau = m as f64 * dt;
        let full = io_map(&gen, &b, &cop, &u, 2.0, dt).unwrap();
        let tail = io_map(&gen, &b, &cop, &u.shifted(m), 2.0 - tau, dt).unwrap();
        let z = extrapolated_convolution(&gen, &b, &u, tau).unwrap();
        let free = output_map(&gen, &cop, &z, 2.0 - tau, dt).unwrap();
        for n in 0..=(200 - m) {
            let lhs = full.at(n + m);
            let rhs = tail.at(n) + free.at(n);
            assert!((lhs - rhs).norm() <= 1e-10);
        }
    }

    proptest! {
        #[test]
        fn io_map_is_linear(a in prop::collection::vec(-1.0f64..1.0, 41), b2 in prop::collection::vec(-1.0f64..1.0, 41)) {
            let gen = Generator::heat(6);
            let b = ControlOp::lumped_profile(6, |k| k);
            let cop = ObservationOp::lumped_profile(6, |k| 1.0 / k);
            let u1 = GridSignal::new(0.025, a.iter().map(|&v| real_vector(&[v])).collect()).unwrap();
            let u2 = GridSignal::new(0.025, b2.iter().map(|&v| real_vector(&[v])).collect()).unwrap();
            let combo = u1.add(&u2.scaled(2.0)).unwrap();
            let y = io_map(&gen, &b, &cop, &combo, 1.0, 0.025).unwrap();
            let y1 = io_map(&gen, &b, &cop, &u1, 1.0, 0.025).unwrap();
            let y2 = io_map(&gen, &b, &cop, &u2, 1.0, 0.025).unwrap();
            let rhs = y1.add(&y2.scaled(2.0)).unwrap();
            prop_assert!(y.max_abs_diff(&rhs) <= 1e-10);
        }
    }
}
