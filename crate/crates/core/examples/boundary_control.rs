//! Heat rod controlled through its end values: the Dirichlet lift, and a
//! noisy closed loop driven by constant boundary data.

use wellposed::linalg::{c, CMatrix, CVector};
use wellposed::perturbation::{dirichlet_map, solve_boundary_sde, BoundaryEnds, BoundarySpec};
use wellposed::stochastic::{AdaptedSignal, BrownianEnsemble, InitialState, NoiseOp};

fn main() -> wellposed::Result<()> {
    let bs = BoundarySpec::heat(31, 1.0, BoundaryEnds::Both)?;
    let d = dirichlet_map(&bs, 0.0)?;
    let v = CVector::from_vec(vec![c(0.0), c(1.0)]);
    let lift = d.apply(&v);
    let worst = bs.nodes().iter().zip(lift.iter()).map(|(x, y)| (y.re - x).abs()).fold(0.0, f64::max);
    println!("harmonic lift of (0, 1) deviates from x by {worst:.1e}");

    let w = BrownianEnsemble::sample(5, 1e-3, 500, 64)?;
    let u = AdaptedSignal::constant(&[0.0, 1.0]);
    let k = CMatrix::zeros(31, 31);
    let run = solve_boundary_sde(&bs, &k, &NoiseOp::scalar_multiple(31, 0.2), &InitialState::Zero, &u, &w)?;
    let mid = run.states.stored_nodes() - 1;
    let mean: f64 = (0..w.paths()).map(|p| run.states.state(p, mid)[15].re).sum::<f64>() / w.paths() as f64;
    println!("mean mid-rod temperature at t = {}: {mean:.4} (stationary value 0.5)", run.states.time(mid));
    Ok(())
}
