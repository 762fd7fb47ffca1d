//! Unbounded observation of the heat semigroup: admissibility constants for
//! c_k = k^p, the Yosida extension on two initial states, and the transfer
//! function along the real axis.

use wellposed::linalg::{c, CVector};
use wellposed::operators::{
    obs_admissibility_constant, transfer_function, yosida_limit, ControlOp, Generator, ObservationOp, YosidaLadder,
};

fn main() -> wellposed::Result<()> {
    let modes = 64;
    let gen = Generator::heat(modes);

    println!("observation c_k = k^p on {modes} heat modes, horizon 1");
    for p in [0.0, 0.6, 1.0] {
        let cop = ObservationOp::diagonal_real(&(1..=modes).map(|k| (k as f64).powf(p)).collect::<Vec<_>>());
        println!("  p = {p:.1}: gamma = {:.6}", obs_admissibility_constant(&gen, &cop, 1.0)?);
    }

    let point = ObservationOp::lumped_profile(modes, |k| k);
    let ladder = YosidaLadder::default_for(&gen);
    for (label, power) in [("x_k = k^-3", 3), ("x_k = k^-1", 1)] {
        let x = CVector::from_fn(modes, |i, _| c(((i + 1) as f64).powi(-power)));
        let r = yosida_limit(&point, &gen, &x, &ladder)?;
        println!("  Yosida ladder on {label}: {:?} after {} rungs, value {:.6}", r.verdict, r.history.len(), r.value[0].re);
    }

    let b = ControlOp::lumped_profile(modes, |k| 1.0 / k);
    for lambda in [1.0, 10.0, 100.0, 1000.0] {
        let g = transfer_function(&gen, &b, &point, c(lambda))?;
        println!("  G({lambda:>6}) = {:.6}", g[(0, 0)].re);
    }
    Ok(())
}
