//! Scalar Ornstein-Uhlenbeck process: mild solution, variance against the
//! closed form, the Ito isometry for one adapted integrand and the strong
//! order of the exponential Euler scheme.

use wellposed::linalg::c;
use wellposed::stochastic::stats::mean_se;
use wellposed::stochastic::{
    ito_isometry, solve_linear_sde, strong_order_linear_noise, AdaptedSignal, BrownianEnsemble, InitialState,
    LinearSystemSpec, NoiseOp,
};
use wellposed::operators::{ControlOp, Generator, ObservationOp};

fn main() -> wellposed::Result<()> {
    let w = BrownianEnsemble::sample(7, 1e-3, 1000, 4000)?;
    let spec = LinearSystemSpec::new(
        Generator::from_real_spectrum(&[-1.0])?,
        ControlOp::diagonal_real(&[1.0]),
        ObservationOp::identity(1),
        NoiseOp::additive_real(&[1.0]),
    )?;
    let x = solve_linear_sde(&spec, &InitialState::Zero, &AdaptedSignal::zero(1), &w)?;
    let finals: Vec<f64> = x.final_states().iter().map(|v| v[0].re).collect();
    let sq: Vec<f64> = finals.iter().map(|v| v * v).collect();
    let (var, se) = mean_se(&sq);
    println!("Var X(1) = {var:.5} +- {se:.5}, closed form {:.5}", (1.0 - (-2.0f64).exp()) / 2.0);

    let f = AdaptedSignal::new(1, |past, out| out[0] = c(past.t + past.w.sin()));
    let iso = ito_isometry(&f, &w)?;
    println!("Ito isometry for f = t + sin W: within 4 SE: {}", iso.within(4.0));

    let study = strong_order_linear_noise(11, 1000, 6, 3)?;
    println!("strong order {:.3} from rms errors {:?}", study.order, study.rms_errors);
    Ok(())
}
