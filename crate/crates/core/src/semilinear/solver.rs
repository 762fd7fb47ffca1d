use super::nonlinear::{lipschitz_validate, LipschitzReport, Nonlinearity};
use crate::error::{Error, Result};
use crate::linalg::{c, CVector};
use crate::operators::{obs_admissibility_constant, Generator, ObservationOp, Propagator};
use crate::stochastic::{BrownianEnsemble, InitialState, Provenance, TrajectoryEnsemble};

/// States beyond this norm abort the run.
pub const OVERFLOW_GUARD: f64 = 1e100;

const VALIDATION_SAMPLES: usize = 1000;
const VALIDATION_SEED: u64 = 0x5e11;

/// `dX = (AX + G(X))dt + F(X)dW` observed through `C`.
#[derive(Clone, Debug)]
pub struct SemilinearSpec {
    pub gen: Generator,
    pub obs: ObservationOp,
    pub g: Nonlinearity,
    pub f: Nonlinearity,
    pub lipschitz: f64,
    pub growth: f64,
    validation: LipschitzReport,
}

impl SemilinearSpec {
    /// Rejects declared constants that the sampler refutes and observations
    /// that are not admissible on the unit horizon.
    pub fn new(
        gen: Generator,
        obs: ObservationOp,
        g: Nonlinearity,
        f: Nonlinearity,
        lipschitz: f64,
        growth: f64,
    ) -> Result<Self> {
        let gamma = obs_admissibility_constant(&gen, &obs, 1.0)?;
        if !gamma.is_finite() {
            return Err(Error::NotAdmissible("observation operator fails the admissibility test".into()));
        }
        let validation =
            lipschitz_validate(&g, &f, lipschitz, growth, gen.dim(), VALIDATION_SAMPLES, VALIDATION_SEED)?
                .into_result(lipschitz)?;
        Ok(Self { gen, obs, g, f, lipschitz, growth, validation })
    }

    /// Splits `L` evenly between drift and diffusion saturations `(L/2) tanh`.
    pub fn tanh_pair(gen: Generator, obs: ObservationOp, l: f64) -> Result<Self> {
        let half = 0.5 * l;
        let g = Nonlinearity::Tanh { scale: half };
        Self::new(gen, obs, g.clone(), g, l, 2.0 * half * half)
    }

    pub fn dim(&self) -> usize {
        self.gen.dim()
    }

    pub fn validation(&self) -> &LipschitzReport {
        &self.validation
    }

    pub fn describe(&self) -> String {
        format!("semilinear|{:?}|{:?}|{:?}|{:?}|{}|{}", self.gen, self.obs, self.g, self.f, self.lipschitz, self.growth)
    }

    pub(crate) fn step(&self, prop: &Propagator, x: &CVector, dw: f64) -> CVector {
        let mut y = self.g.apply(x) * c(prop.dt());
        y += self.f.apply(x) * c(dw);
        y += x;
        prop.apply(&y)
    }
}

/// Runs one path, reporting every node to `emit`.
pub(crate) fn run_path(
    spec: &SemilinearSpec,
    prop: &Propagator,
    x0: CVector,
    w: &BrownianEnsemble,
    p: usize,
    emit: &mut dyn FnMut(usize, &CVector),
) -> Result<()> {
    let mut x = x0;
    emit(0, &x);
    for n in 0..w.steps() {
        x = spec.step(prop, &x, w.increment(p, n));
        check_finite(&x, n + 1, p)?;
        emit(n + 1, &x);
    }
    Ok(())
}

pub(crate) fn check_finite(x: &CVector, node: usize, path: usize) -> Result<()> {
    let norm = x.norm();
    if !(norm <= OVERFLOW_GUARD) {
        return Err(Error::BlowUp { node, path, norm });
    }
    Ok(())
}

/// Exponential-Euler mild scheme `X ← T(Δt)(X + G(X)Δt + F(X)ΔW)`.
pub fn solve_semilinear(spec: &SemilinearSpec, xi: &InitialState, w: &BrownianEnsemble) -> Result<TrajectoryEnsemble> {
    let k = spec.dim();
    xi.validate(k, w.paths())?;
    let prop = spec.gen.propagator(w.dt())?;
    let prov = Provenance::new(w.seed(), &format!("{}|{xi:?}", spec.describe()));
    TrajectoryEnsemble::collect(w.dt(), w.steps(), 1, k, w.paths(), prov, |p, emit| {
        run_path(spec, &prop, xi.for_path(p, k), w, p, emit)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::stats::mean_se;

    fn scalar(lambda: f64, g: Nonlinearity, f: Nonlinearity) -> SemilinearSpec {
        let l = g.lipschitz() + f.lipschitz();
        let beta = 2.0 * (g.lipschitz().powi(2) + f.lipschitz().powi(2));
        SemilinearSpec::new(
            Generator::from_real_spectrum(&[lambda]).unwrap(),
            ObservationOp::identity(1),
            g,
            f,
            l,
            beta,
        )
        .unwrap()
    }

    #[test]
    fn zero_nonlinearity_follows_the_semigroup() {
        let spec = SemilinearSpec::tanh_pair(
            Generator::from_real_spectrum(&[-1.0, -2.0]).unwrap(),
            ObservationOp::identity(2),
            0.0,
        )
        .unwrap();
        let w = BrownianEnsemble::sample(3, 1.0 / 16.0, 16, 4).unwrap();
        let xi = crate::linalg::real_vector(&[1.0, -2.0]);
        let x = solve_semilinear(&spec, &InitialState::Fixed(xi.clone()), &w).unwrap();
        let exact = spec.gen.semigroup_apply(1.0, &xi).unwrap();
        for p in 0..4 {
            assert!((x.state_vector(p, 16) - &exact).norm() < 1e-14);
        }
    }

    #[test]
    fn linear_damping_converges_at_first_order() {
        let spec = scalar(0.0, Nonlinearity::Linear { scale: -1.0 }, Nonlinearity::Zero);
        let err = |steps: usize| {
            let w = BrownianEnsemble::sample(0, 1.0 / steps as f64, steps, 1).unwrap();
            let x = solve_semilinear(&spec, &InitialState::real(&[1.0]), &w).unwrap();
            (x.state(0, steps)[0].re - (-1f64).exp()).abs()
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 < 2e-3, "{e1}");
        assert!((e1 / e2 - 2.0).abs() < 0.05, "{}", e1 / e2);
    }

    #[test]
    fn multiplicative_noise_second_moment() {
        let spec = scalar(-1.0, Nonlinearity::Zero, Nonlinearity::Linear { scale: 1.0 });
        let w = BrownianEnsemble::sample(11, 1.0 / 256.0, 256, 20_000).unwrap();
        let x = solve_semilinear(&spec, &InitialState::real(&[1.0]), &w).unwrap();
        let sq: Vec<f64> = x.final_states().iter().map(|v| v.norm_squared()).collect();
        let (m, se) = mean_se(&sq);
        let target = (-1f64).exp();
        // Scheme bias: e^{-2}(1 + Δt)^N against e^{-1}.
        assert!((m - target).abs() <= 4.0 * se + 2e-3, "{m} {se}");
    }

    #[test]
    fn rejected_declaration_blocks_construction() {
        let r = SemilinearSpec::new(
            Generator::from_real_spectrum(&[-1.0]).unwrap(),
            ObservationOp::identity(1),
            Nonlinearity::Tanh { scale: 1.0 },
            Nonlinearity::Zero,
            0.5,
            1.0,
        );
        assert!(matches!(r, Err(Error::LipschitzViolation { .. })));
    }

    #[test]
    fn blow_up_is_reported() {
        let spec = scalar(0.0, Nonlinearity::Linear { scale: 1.0 }, Nonlinearity::Zero);
        let w = BrownianEnsemble::sample(0, 1.0, 400, 1).unwrap();
        let r = solve_semilinear(&spec, &InitialState::real(&[1.0]), &w);
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }
}
