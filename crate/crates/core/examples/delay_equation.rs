//! x'(t) = x(t - 1) with unit history on both routes, then a noisy delay
//! system with a delayed input where the routes agree in the limit.

use wellposed::delay::{assemble_delay_product, delay_crosscheck, solve_delay_direct, solve_delay_product, DelaySpec, SegmentState};
use wellposed::stochastic::{AdaptedSignal, BrownianEnsemble, InitialState};

fn main() -> wellposed::Result<()> {
    let h = 1e-3;
    let spec = DelaySpec::scalar(0.0, &[(-1.0, 1.0)], &[], 1.0, 0.0, h)?;
    let phi = SegmentState::constant(1.0, h, &[1.0])?;
    let psi = SegmentState::zeros(1.0, h, 1)?;
    let w = BrownianEnsemble::sample(1, h, 1000, 1)?;
    let xi = InitialState::real(&[1.0]);
    let u = AdaptedSignal::zero(spec.input_dim());
    let direct = solve_delay_direct(&spec, &xi, &phi, &psi, &u, &w)?;
    let product = solve_delay_product(&assemble_delay_product(&spec)?, &xi, &phi, &psi, &u, &w)?;
    let last = direct.states.stored_nodes() - 1;
    println!("x(1): direct {:.12}, product {:.12}, exact 2", direct.states.state(0, last)[0].re, product.states.state(0, last)[0].re);

    let u = AdaptedSignal::of_time(1, |t, o| o.fill(wellposed::linalg::c((3.0 * t).sin())));
    let mut w = BrownianEnsemble::sample(9, 1.0 / 16.0, 16, 40)?;
    for _ in 0..4 {
        let spec = DelaySpec::scalar(-1.0, &[(-0.5, 0.5), (-0.125, -0.3)], &[(-0.25, 1.0)], 0.5, 0.5, w.dt())?;
        let phi = SegmentState::from_fn(0.5, w.dt(), 1, |t| vec![1.0 + t])?;
        let psi = SegmentState::from_fn(0.5, w.dt(), 1, |t| vec![(3.0 * t).sin()])?;
        println!("dt = {:<9} route gap {:.3e}", w.dt(), delay_crosscheck(&spec, &xi, &phi, &psi, &u, &w)?);
        w = w.refined();
    }
    Ok(())
}
