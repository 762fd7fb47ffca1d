use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::adapted::AdaptedSignal;
use super::brownian::BrownianEnsemble;
use super::ensemble::{Provenance, TrajectoryEnsemble};
use super::noise::NoiseOp;
use super::stats::{log_log_slope, mean_se};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CVector, C64, ZERO};
use crate::operators::{
    ctrl_admissibility_check, obs_admissibility_constant, ControlOp, Generator, ObservationOp, Propagator,
};

/// `dX = (AX + Bu)dt + ℳX dW`, `Y = CX`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystemSpec {
    pub gen: Generator,
    pub b: ControlOp,
    pub c: ObservationOp,
    pub noise: NoiseOp,
}

impl LinearSystemSpec {
    /// Checks dimensions, observation admissibility on `[0, 1]` and control
    /// admissibility on `[0, 1]`. Shift grids have no Gramian route and skip
    /// the admissibility part.
    pub fn new(gen: Generator, b: ControlOp, c: ObservationOp, noise: NoiseOp) -> Result<Self> {
        let spec = Self::unchecked(gen, b, c, noise)?;
        match obs_admissibility_constant(&spec.gen, &spec.c, 1.0) {
            Ok(g) if !g.is_finite() => {
                return Err(Error::NotAdmissible("observation operator fails the Gramian growth test".into()))
            }
            Ok(_) | Err(Error::Unsupported(_)) => {}
            Err(e) => return Err(e),
        }
        match ctrl_admissibility_check(&spec.gen, &spec.b, 1.0) {
            Ok(r) if !r.admissible => {
                return Err(Error::NotAdmissible("control operator fails the Gramian growth test".into()))
            }
            Ok(_) | Err(Error::Unsupported(_)) => {}
            Err(e) => return Err(e),
        }
        Ok(spec)
    }

    /// Dimension checks only.
    pub fn unchecked(gen: Generator, b: ControlOp, c: ObservationOp, noise: NoiseOp) -> Result<Self> {
        b.validate_for(&gen)?;
        c.validate_for(&gen)?;
        noise.validate(gen.dim())?;
        Ok(Self { gen, b, c, noise })
    }

    /// Scalar `dX = (λX + bu)dt + mX dW`, `Y = cX`.
    pub fn scalar(lambda: f64, b: f64, c: f64, m: f64) -> Result<Self> {
        Self::new(
            Generator::from_real_spectrum(&[lambda])?,
            ControlOp::diagonal_real(&[b]),
            ObservationOp::diagonal_real(&[c]),
            NoiseOp::diagonal_real(&[m]),
        )
    }

    pub fn dim(&self) -> usize {
        self.gen.dim()
    }

    pub fn input_dim(&self) -> usize {
        self.b.input_dim()
    }

    pub fn without_noise(&self) -> Self {
        Self { noise: NoiseOp::zero(self.dim()), ..self.clone() }
    }

    /// Stable textual description, hashed into provenance records.
    pub fn describe(&self) -> String {
        format!("{:?}|{:?}|{:?}|{:?}", self.gen, self.b, self.c, self.noise)
    }
}

/// Initial data, measurable at time zero.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Zero,
    Fixed(CVector),
    PerPath(Vec<CVector>),
}

impl InitialState {
    pub fn real(x: &[f64]) -> Self {
        Self::Fixed(linalg::real_vector(x))
    }

    /// Independent `N(0, scale²)` entries per path from a stream disjoint from
    /// every Brownian stream of the same seed.
    pub fn gaussian(seed: u64, paths: usize, dim: usize, scale: f64) -> Self {
        Self::PerPath(
            (0..paths)
                .map(|p| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream((1u64 << 63) | p as u64);
                    CVector::from_fn(dim, |_, _| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        c(scale * z)
                    })
                })
                .collect(),
        )
    }

    pub fn for_path(&self, p: usize, dim: usize) -> CVector {
        match self {
            Self::Zero => CVector::zeros(dim),
            Self::Fixed(x) => x.clone(),
            Self::PerPath(v) => v[p].clone(),
        }
    }

    pub(crate) fn validate(&self, dim: usize, paths: usize) -> Result<()> {
        let bad = match self {
            Self::Zero => None,
            Self::Fixed(x) => (x.len() != dim).then_some(x.len()),
            Self::PerPath(v) if v.len() != paths => {
                return Err(Error::DimensionMismatch { context: "initial states per path", expected: paths, found: v.len() })
            }
            Self::PerPath(v) => v.iter().find(|x| x.len() != dim).map(|x| x.len()),
        };
        match bad {
            Some(found) => Err(Error::DimensionMismatch { context: "initial state", expected: dim, found }),
            None => Ok(()),
        }
    }

    fn describe(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Fixed(x) => format!("{x:?}"),
            Self::PerPath(v) => format!("per-path {}", v.len()),
        }
    }
}

/// One exponential-Euler step `T(x + ℳx ΔW) + φ1 B u`.
pub(crate) struct Stepper<'a> {
    spec: &'a LinearSystemSpec,
    prop: Propagator,
    noisy: bool,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(spec: &'a LinearSystemSpec, dt: f64) -> Result<Self> {
        Ok(Self { spec, prop: spec.gen.propagator(dt)?, noisy: !spec.noise.is_zero() })
    }

    pub(crate) fn step(&self, x: &CVector, u: Option<&[C64]>, dw: f64) -> CVector {
        let mut next = if self.noisy {
            let mx = self.spec.noise.apply(x);
            self.prop.apply(&(x + mx * c(dw)))
        } else {
            self.prop.apply(x)
        };
        if let Some(u) = u {
            let bu = self.spec.b.apply(&CVector::from_column_slice(u));
            next += self.prop.apply_phi1(&bu);
        }
        next
    }

    /// Path `p` from `x0`, emitting every node.
    pub(crate) fn run(
        &self,
        w: &BrownianEnsemble,
        p: usize,
        x0: CVector,
        u: Option<&AdaptedSignal>,
        emit: &mut dyn FnMut(usize, &CVector),
    ) {
        let mut x = x0;
        let mut buf = vec![ZERO; u.map_or(0, |s| s.dim())];
        emit(0, &x);
        w.walk(p, |past, dw| {
            let uu = u.map(|s| {
                s.eval(past, &mut buf);
                buf.as_slice()
            });
            x = self.step(&x, uu, dw);
            emit(past.node + 1, &x);
        });
    }
}

fn check_input(spec: &LinearSystemSpec, u: &AdaptedSignal, w: &BrownianEnsemble) -> Result<()> {
    if u.dim() != spec.input_dim() {
        return Err(Error::DimensionMismatch { context: "input signal", expected: spec.input_dim(), found: u.dim() });
    }
    u.check_grid(w.dt(), w.steps())
}

/// Mild solution by exponential Euler, every node stored.
pub fn solve_linear_sde(
    spec: &LinearSystemSpec,
    xi: &InitialState,
    u: &AdaptedSignal,
    w: &BrownianEnsemble,
) -> Result<TrajectoryEnsemble> {
    solve_linear_sde_strided(spec, xi, u, w, 1)
}

/// Mild solution keeping every `stride`-th node.
pub fn solve_linear_sde_strided(
    spec: &LinearSystemSpec,
    xi: &InitialState,
    u: &AdaptedSignal,
    w: &BrownianEnsemble,
    stride: usize,
) -> Result<TrajectoryEnsemble> {
    check_input(spec, u, w)?;
    xi.validate(spec.dim(), w.paths())?;
    let stepper = Stepper::new(spec, w.dt())?;
    let input = (!spec.b.is_zero()).then_some(u);
    let prov = Provenance::new(w.seed(), &format!("sde|{}|{}", spec.describe(), xi.describe()));
    TrajectoryEnsemble::collect(w.dt(), w.steps(), stride, spec.dim(), w.paths(), prov, |p, emit| {
        stepper.run(w, p, xi.for_path(p, spec.dim()), input, emit);
        Ok(())
    })
}

/// `Φ^W u`: the mild solution started at zero. Linear in `u` when the noise
/// is linear; additive noise makes it affine.
pub fn phi_w(spec: &LinearSystemSpec, u: &AdaptedSignal, w: &BrownianEnsemble) -> Result<TrajectoryEnsemble> {
    solve_linear_sde(spec, &InitialState::Zero, u, w)
}

/// `(𝕋⋄ζ)(t_n)` by `X_{n+1} = T(Δt)(X_n + ζ_n ΔW_n)`, which sums
/// `T(t_n − t_i) ζ_i ΔW_i` over `i < n`.
pub fn stochastic_convolution(
    gen: &Generator,
    zeta: &AdaptedSignal,
    w: &BrownianEnsemble,
) -> Result<TrajectoryEnsemble> {
    if zeta.dim() != gen.dim() {
        return Err(Error::DimensionMismatch { context: "convolution integrand", expected: gen.dim(), found: zeta.dim() });
    }
    zeta.check_grid(w.dt(), w.steps())?;
    let prop = gen.propagator(w.dt())?;
    let prov = Provenance::new(w.seed(), &format!("convolution|{gen:?}"));
    TrajectoryEnsemble::collect(w.dt(), w.steps(), 1, gen.dim(), w.paths(), prov, |p, emit| {
        let mut x = CVector::zeros(gen.dim());
        let mut buf = vec![ZERO; gen.dim()];
        emit(0, &x);
        w.walk(p, |past, dw| {
            zeta.eval(past, &mut buf);
            x = convolution_step(&prop, &x, &buf, dw);
            emit(past.node + 1, &x);
        });
        Ok(())
    })
}

fn convolution_step(prop: &Propagator, x: &CVector, zeta: &[C64], dw: f64) -> CVector {
    let y = CVector::from_iterator(x.len(), x.iter().zip(zeta).map(|(a, z)| a + z * dw));
    prop.apply(&y)
}

/// Max over coarse nodes of `E‖Φ^W u − (Φ̃u + 𝕋⋄ℳΦ^W u)‖²`.
///
/// `Φ̃u` is exact for the cellwise-constant input. The convolution is evaluated
/// on the once-refined coupled grid with `ℳΦ^W u` held constant over each
/// coarse cell, so the mismatch measures the scheme's noise discretization.
pub fn phi_w_fixed_point_residual(spec: &LinearSystemSpec, u: &AdaptedSignal, w: &BrownianEnsemble) -> Result<f64> {
    check_input(spec, u, w)?;
    let fine = w.refined();
    let coarse_step = Stepper::new(spec, w.dt())?;
    let fine_prop = spec.gen.propagator(fine.dt())?;
    let deterministic = spec.without_noise();
    let drift_step = Stepper::new(&deterministic, w.dt())?;
    let dim = spec.dim();
    let input = (!spec.b.is_zero()).then_some(u);

    let per_path: Vec<Vec<f64>> = (0..w.paths())
        .into_par_iter()
        .map(|p| {
            let mut lhs = Vec::with_capacity(w.steps() + 1);
            coarse_step.run(w, p, CVector::zeros(dim), input, &mut |_, x| lhs.push(x.clone()));

            let mut drift = Vec::with_capacity(w.steps() + 1);
            drift_step.run(w, p, CVector::zeros(dim), input, &mut |_, x| drift.push(x.clone()));

            let mut conv = CVector::zeros(dim);
            let mut err = Vec::with_capacity(w.steps() + 1);
            err.push((&lhs[0] - &drift[0]).norm_squared());
            let row = fine.path(p);
            for n in 0..w.steps() {
                let zeta = spec.noise.apply(&lhs[n]);
                for dw in &row[2 * n..2 * n + 2] {
                    conv = convolution_step(&fine_prop, &conv, zeta.as_slice(), *dw);
                }
                err.push((&lhs[n + 1] - &drift[n + 1] - &conv).norm_squared());
            }
            err
        })
        .collect();

    let mut worst: f64 = 0.0;
    for n in 0..=w.steps() {
        let col: Vec<f64> = per_path.iter().map(|e| e[n]).collect();
        worst = worst.max(linalg::pairwise_mean(&col));
    }
    Ok(worst)
}

/// Monte Carlo sides of `E∫_0^α‖C_Λ(𝕋⋄ζ)‖² ≤ γ² E∫_0^α‖ζ‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvolutionBound {
    pub lhs: f64,
    pub lhs_se: f64,
    /// `γ²·E∫‖ζ‖²`.
    pub rhs: f64,
    pub rhs_se: f64,
    pub gamma: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Between nodes the convolution is `T(s)(X_n + ζ_n ΔW_n)`, so the output
/// energy of each cell is the quadratic form of the observability Gramian over
/// one step. States at the nodes are passed through the domain test.
pub fn convolution_yosida_bound_check(
    gen: &Generator,
    cop: &ObservationOp,
    zeta: &AdaptedSignal,
    w: &BrownianEnsemble,
    alpha: f64,
    slack: f64,
) -> Result<ConvolutionBound> {
    if zeta.dim() != gen.dim() {
        return Err(Error::DimensionMismatch { context: "convolution integrand", expected: gen.dim(), found: zeta.dim() });
    }
    cop.validate_for(gen)?;
    let steps = crate::operators::steps_for(alpha, w.dt())?;
    w.check_grid(w.dt(), w.steps())?;
    if steps > w.steps() {
        return Err(Error::GridMismatch(format!("horizon needs {steps} steps, ensemble has {}", w.steps())));
    }
    zeta.check_grid(w.dt(), steps)?;
    let gamma = obs_admissibility_constant(gen, cop, alpha)?;
    if !gamma.is_finite() {
        return Err(Error::NotAdmissible("observation operator fails the Gramian growth test".into()));
    }
    let cell = crate::operators::observability_gramian(gen, cop, w.dt())?;
    let prop = gen.propagator(w.dt())?;
    let dt = w.dt();

    let per_path: Vec<Result<(f64, f64)>> = (0..w.paths())
        .into_par_iter()
        .map(|p| {
            let mut x = CVector::zeros(gen.dim());
            let mut buf = vec![ZERO; gen.dim()];
            let mut out = Vec::with_capacity(steps);
            let mut inp = Vec::with_capacity(steps);
            let mut fault = None;
            w.walk(p, |past, dw| {
                if past.node >= steps || fault.is_some() {
                    return;
                }
                zeta.eval(past, &mut buf);
                inp.push(linalg::norm_sq(&buf) * dt);
                let y = CVector::from_iterator(x.len(), x.iter().zip(&buf).map(|(a, z)| a + z * dw));
                out.push((y.adjoint() * &cell * &y)[(0, 0)].re);
                x = prop.apply(&y);
                if let Err(e) = cop.apply_checked(&x, past.node + 1, Some(p)) {
                    fault = Some(e);
                }
            });
            match fault {
                Some(e) => Err(e),
                None => Ok((linalg::pairwise_sum(&out), linalg::pairwise_sum(&inp))),
            }
        })
        .collect();
    let mut lhs_v = Vec::with_capacity(w.paths());
    let mut rhs_v = Vec::with_capacity(w.paths());
    for r in per_path {
        let (a, b) = r?;
        lhs_v.push(a);
        rhs_v.push(b);
    }
    let (lhs, lhs_se) = mean_se(&lhs_v);
    let (energy, energy_se) = mean_se(&rhs_v);
    let g2 = gamma * gamma;
    let rhs = g2 * energy;
    Ok(ConvolutionBound {
        lhs,
        lhs_se,
        rhs,
        rhs_se: g2 * energy_se,
        gamma,
        slack,
        holds: lhs <= rhs * (1.0 + slack),
    })
}

/// RMS terminal error against an exact solution on coupled dyadic grids.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongOrderStudy {
    pub dts: Vec<f64>,
    pub rms_errors: Vec<f64>,
    pub order: f64,
}

/// Scalar `dX = X dW`, `X(0) = 1` on `[0, 1]` with exact solution
/// `exp(W(1) − 1/2)`, at `Δt = 2^{-base_level}` and `levels − 1` halvings.
pub fn strong_order_linear_noise(seed: u64, paths: usize, base_level: u32, levels: usize) -> Result<StrongOrderStudy> {
    let spec = LinearSystemSpec::scalar(0.0, 0.0, 1.0, 1.0)?;
    let steps = 1usize << base_level;
    let mut w = BrownianEnsemble::sample(seed, 1.0 / steps as f64, steps, paths)?;
    let xi = InitialState::real(&[1.0]);
    let u = AdaptedSignal::zero(1);
    let mut dts = Vec::with_capacity(levels);
    let mut rms_errors = Vec::with_capacity(levels);
    for level in 0..levels {
        if level > 0 {
            w = w.refined();
        }
        let x = solve_linear_sde_strided(&spec, &xi, &u, &w, w.steps())?;
        let sq: Vec<f64> = (0..paths)
            .map(|p| {
                let exact = (w.value(p, w.steps()) - 0.5).exp();
                (x.state(p, 1)[0].re - exact).powi(2)
            })
            .collect();
        dts.push(w.dt());
        rms_errors.push(linalg::pairwise_mean(&sq).sqrt());
    }
    let order = log_log_slope(&dts, &rms_errors);
    Ok(StrongOrderStudy { dts, rms_errors, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{extrapolated_convolution, GridSignal};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ou() -> LinearSystemSpec {
        LinearSystemSpec::new(
            Generator::from_real_spectrum(&[-1.0]).unwrap(),
            ControlOp::diagonal_real(&[0.0]),
            ObservationOp::diagonal_real(&[1.0]),
            NoiseOp::additive_real(&[1.0]),
        )
        .unwrap()
    }

    fn final_values(e: &TrajectoryEnsemble) -> Vec<f64> {
        (0..e.paths()).map(|p| e.state(p, e.stored_nodes() - 1)[0].re).collect()
    }

    #[test]
    fn deterministic_reduction_is_exact() {
        let spec = LinearSystemSpec::new(
            Generator::heat(5),
            ControlOp::zero(5, 1),
            ObservationOp::identity(5),
            NoiseOp::zero(5),
        )
        .unwrap();
        let w = BrownianEnsemble::sample(1, 0.01, 100, 3).unwrap();
        let xi = linalg::real_vector(&[1.0, 1.0, 1.0, 1.0, 1.0]);
        let x = solve_linear_sde(&spec, &InitialState::Fixed(xi.clone()), &AdaptedSignal::zero(1), &w).unwrap();
        let exact = spec.gen.semigroup_apply(1.0, &xi).unwrap();
        for p in 0..3 {
            for k in 0..5 {
                assert_relative_eq!(x.state(p, 100)[k].re, exact[k].re, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn ou_variance() {
        let w = BrownianEnsemble::sample(2024, 1e-3, 1000, 10_000).unwrap();
        let x = solve_linear_sde_strided(&ou(), &InitialState::Zero, &AdaptedSignal::zero(1), &w, 1000).unwrap();
        let sq: Vec<f64> = final_values(&x).iter().map(|v| v * v).collect();
        let (m, se) = mean_se(&sq);
        let exact = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((m - exact).abs() <= 4.0 * se + 2e-3, "{m} vs {exact} (se {se})");
    }

    #[test]
    fn linear_noise_second_moment() {
        // λ = 0, ℳ = 1, ξ = 1: E X(1)² = e; the scheme gives (1 + Δt)^N.
        let spec = LinearSystemSpec::scalar(0.0, 0.0, 1.0, 1.0).unwrap();
        let w = BrownianEnsemble::sample(77, 1e-2, 100, 20_000).unwrap();
        let x = solve_linear_sde_strided(&spec, &InitialState::real(&[1.0]), &AdaptedSignal::zero(1), &w, 100).unwrap();
        let sq: Vec<f64> = final_values(&x).iter().map(|v| v * v).collect();
        let (m, se) = mean_se(&sq);
        assert!((m - 1.0f64.exp()).abs() <= 4.0 * se + 0.02, "{m} (se {se})");
    }

    #[test]
    fn convolution_of_identity_semigroup() {
        let gen = Generator::from_real_spectrum(&[0.0, 0.0]).unwrap();
        let w = BrownianEnsemble::sample(5, 0.01, 50, 4).unwrap();
        let z = stochastic_convolution(&gen, &AdaptedSignal::constant(&[2.0, -1.0]), &w).unwrap();
        for p in 0..4 {
            for n in [0, 17, 50] {
                let wn = w.value(p, n);
                assert!((z.state(p, n)[0].re - 2.0 * wn).abs() < 1e-12);
                assert!((z.state(p, n)[1].re + wn).abs() < 1e-12);
            }
        }
        let zero = stochastic_convolution(&gen, &AdaptedSignal::zero(2), &w).unwrap();
        assert!(zero.mean_square().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let gen = Generator::from_real_spectrum(&[-1.5]).unwrap();
        let w = BrownianEnsemble::sample(8, 0.05, 20, 2).unwrap();
        let zeta = AdaptedSignal::new(1, |past, out| out[0] = c(1.0 + past.w));
        let z = stochastic_convolution(&gen, &zeta, &w).unwrap();
        for p in 0..2 {
            let n = 20;
            let mut direct = 0.0;
            for i in 0..n {
                direct += (-1.5 * (n - i) as f64 * 0.05).exp() * (1.0 + w.value(p, i)) * w.increment(p, i);
            }
            assert!((z.state(p, n)[0].re - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_w_without_noise_is_the_input_map() {
        let spec = LinearSystemSpec::new(
            Generator::from_real_spectrum(&[-1.0, -3.0]).unwrap(),
            ControlOp::diagonal_real(&[1.0, 0.5]),
            ObservationOp::identity(2),
            NoiseOp::zero(2),
        )
        .unwrap();
        let w = BrownianEnsemble::sample(4, 0.02, 50, 2).unwrap();
        let g = GridSignal::from_fn(0.02, 50, 2, |t| vec![t.sin(), 1.0]);
        let x = phi_w(&spec, &AdaptedSignal::from_grid(g.clone()), &w).unwrap();
        let oracle = extrapolated_convolution(&spec.gen, &spec.b, &g, 1.0).unwrap();
        for k in 0..2 {
            assert!((x.state(1, 50)[k] - oracle[k]).norm() < 1e-13);
        }
        assert_eq!(phi_w_fixed_point_residual(&spec, &AdaptedSignal::zero(2), &w).unwrap(), 0.0);
    }

    #[test]
    fn fixed_point_residual_vanishes_without_noise_and_shrinks_with_step() {
        let quiet = LinearSystemSpec::scalar(-1.0, 1.0, 1.0, 0.0).unwrap();
        let w = BrownianEnsemble::sample(6, 0.01, 100, 50).unwrap();
        let u = AdaptedSignal::constant(&[1.0]);
        assert!(phi_w_fixed_point_residual(&quiet, &u, &w).unwrap() <= 1e-12);

        let spec = LinearSystemSpec::scalar(-1.0, 1.0, 1.0, 1.0).unwrap();
        let u = AdaptedSignal::of_time(1, |t, out| out[0] = c((3.0 * t).cos()));
        let w = BrownianEnsemble::sample(6, 1.0 / 64.0, 64, 500).unwrap();
        let r1 = phi_w_fixed_point_residual(&spec, &u, &w).unwrap();
        let r2 = phi_w_fixed_point_residual(&spec, &u, &w.refined()).unwrap();
        assert!(r1 > 0.0 && r2 < r1, "{r1} {r2}");
        assert!(r1 <= w.dt().powf(0.4) && r2 <= (w.dt() / 2.0).powf(0.4));
    }

    #[test]
    fn scalar_convolution_bound() {
        // ∫_0^1 (1 − e^{−2t})/2 dt = 1/2 − (1 − e^{−2})/4.
        let gen = Generator::from_real_spectrum(&[-1.0]).unwrap();
        let cop = ObservationOp::diagonal_real(&[1.0]);
        let w = BrownianEnsemble::sample(12, 0.01, 100, 10_000).unwrap();
        let r = convolution_yosida_bound_check(&gen, &cop, &AdaptedSignal::constant(&[1.0]), &w, 1.0, 0.1).unwrap();
        let exact = 0.5 - (1.0 - (-2.0f64).exp()) / 4.0;
        assert!((r.lhs - exact).abs() <= 4.0 * r.lhs_se + 0.01, "{r:?}");
        assert!(r.holds && r.lhs <= 0.432332 * 1.1);
        assert_relative_eq!(r.rhs, 0.4323323583816936, max_relative = 1e-9);

        let zero = convolution_yosida_bound_check(&gen, &cop, &AdaptedSignal::zero(1), &w, 1.0, 0.1).unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
    }

    #[test]
    fn strong_order_near_one_half() {
        let s = strong_order_linear_noise(99, 2000, 6, 3).unwrap();
        assert!((0.35..=0.75).contains(&s.order), "{s:?}");
    }

    #[test]
    fn gaussian_initial_states_are_reproducible() {
        let a = InitialState::gaussian(5, 3, 2, 1.0);
        assert_eq!(a, InitialState::gaussian(5, 3, 2, 1.0));
        assert!(InitialState::real(&[1.0]).validate(2, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn affine_in_initial_state_and_input(seed in 0u64..1000, a in -2.0f64..2.0, x0 in -1.0f64..1.0) {
            let spec = LinearSystemSpec::new(
                Generator::from_real_spectrum(&[-1.0, -4.0]).unwrap(),
                ControlOp::diagonal_real(&[1.0, 2.0]),
                ObservationOp::identity(2),
                NoiseOp::Dense(linalg::real_matrix(&[&[0.3, 0.1], &[-0.2, 0.5]])),
            ).unwrap();
            let w = BrownianEnsemble::sample(seed, 0.02, 50, 4).unwrap();
            let u = AdaptedSignal::new(2, move |past, out| {
                out[0] = c(a * past.w);
                out[1] = c((past.t * a).sin());
            });
            let xi = InitialState::real(&[x0, 1.0]);
            let full = solve_linear_sde(&spec, &xi, &u, &w).unwrap();
            let free = solve_linear_sde(&spec, &xi, &AdaptedSignal::zero(2), &w).unwrap();
            let forced = phi_w(&spec, &u, &w).unwrap();
            let doubled = phi_w(&spec, &u.scaled(2.0), &w).unwrap();
            for p in 0..4 {
                for n in 0..=50 {
                    for k in 0..2 {
                        let lhs = full.state(p, n)[k];
                        let rhs = free.state(p, n)[k] + forced.state(p, n)[k];
                        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
                        let d = doubled.state(p, n)[k] - forced.state(p, n)[k] * 2.0;
                        prop_assert!(d.norm() <= 1e-12 * forced.state(p, n)[k].norm().max(1e-300) * 2.0 + 1e-300);
                    }
                }
            }
        }
    }
}
