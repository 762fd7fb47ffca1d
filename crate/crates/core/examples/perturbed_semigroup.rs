//! A bounded perturbation of a dense generator: the two semigroup routes, and
//! the variation-of-constants solver against the directly perturbed one under
//! dyadic refinement.

use wellposed::linalg::{c, real_matrix, CVector};
use wellposed::operators::Generator;
use wellposed::perturbation::{compare_routes, vcf_crosscheck, PerturbationOp};
use wellposed::stochastic::{BrownianEnsemble, InitialState, NoiseOp};

fn main() -> wellposed::Result<()> {
    let gen = Generator::dense_auto(real_matrix(&[&[-1.0, 0.5, 0.0], &[-0.5, -1.5, 0.3], &[0.0, -0.3, -2.0]]))?;
    let p = PerturbationOp::dense(real_matrix(&[&[0.2, 0.0, 0.1], &[0.0, -0.1, 0.0], &[0.3, 0.0, 0.1]]), &gen, 1.0)?;
    let x = CVector::from_fn(3, |i, _| c(1.0 - 0.5 * i as f64));
    for t in [0.25, 0.5, 1.0] {
        let r = compare_routes(&gen, &p, t, &x)?;
        println!("t = {t}: route gap {:.2e}", r.gap);
    }

    let noise = NoiseOp::scalar_multiple(3, 0.4);
    let xi = InitialState::Fixed(x);
    let mut w = BrownianEnsemble::sample(3, 1.0 / 16.0, 16, 200)?;
    let mut last = f64::NAN;
    for _ in 0..4 {
        let gap = vcf_crosscheck(&gen, &p, &noise, &xi, &w)?;
        println!("dt = {:<9} max-node mean-square gap {gap:.3e}  ratio {:.2}", w.dt(), last / gap);
        last = gap;
        w = w.refined();
    }
    Ok(())
}
