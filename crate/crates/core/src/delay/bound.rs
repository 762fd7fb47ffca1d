use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::direct::{solve_delay_direct, DelaySpec};
use super::measure::SegmentState;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CVector};
use crate::stochastic::{AdaptedSignal, BrownianEnsemble, InitialState};

/// Deterministic data bundle `(ξ, φ, ψ, u)`.
#[derive(Clone, Debug)]
pub struct DelayData {
    pub xi: CVector,
    pub phi: SegmentState,
    pub psi: SegmentState,
    /// Input as a function of time, `u(t) = a cos t + b sin t` per channel.
    pub u_cos: Vec<f64>,
    pub u_sin: Vec<f64>,
}

impl DelayData {
    pub fn zero(spec: &DelaySpec) -> Result<Self> {
        let m = spec.input_dim();
        Ok(Self {
            xi: CVector::zeros(spec.dim()),
            phi: SegmentState::zeros(spec.r, spec.h, spec.dim())?,
            psi: SegmentState::zeros(spec.r, spec.h, m)?,
            u_cos: vec![0.0; m],
            u_sin: vec![0.0; m],
        })
    }

    /// Affine histories and a trigonometric input with standard normal coefficients.
    pub fn random(spec: &DelaySpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (k, m) = (spec.dim(), spec.input_dim());
        let mut g = || rng.sample::<f64, _>(rand_distr::StandardNormal);
        let xi: Vec<f64> = (0..k).map(|_| g()).collect();
        let (p0, p1): (Vec<f64>, Vec<f64>) = (0..k).map(|_| (g(), g())).unzip();
        let (q0, q1): (Vec<f64>, Vec<f64>) = (0..m).map(|_| (g(), g())).unzip();
        let (a, b): (Vec<f64>, Vec<f64>) = (0..m).map(|_| (g(), g())).unzip();
        Ok(Self {
            xi: linalg::real_vector(&xi),
            phi: SegmentState::from_fn(spec.r, spec.h, k, |t| p0.iter().zip(&p1).map(|(x, y)| x + y * t).collect())?,
            psi: SegmentState::from_fn(spec.r, spec.h, m, |t| q0.iter().zip(&q1).map(|(x, y)| x + y * t).collect())?,
            u_cos: a,
            u_sin: b,
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            xi: &self.xi * c(s),
            phi: self.phi.scaled(s),
            psi: self.psi.scaled(s),
            u_cos: self.u_cos.iter().map(|a| a * s).collect(),
            u_sin: self.u_sin.iter().map(|b| b * s).collect(),
        }
    }

    pub fn input(&self) -> AdaptedSignal {
        let (a, b) = (self.u_cos.clone(), self.u_sin.clone());
        AdaptedSignal::of_time(a.len(), move |t, out| {
            for (o, (x, y)) in out.iter_mut().zip(a.iter().zip(&b)) {
                *o = c(x * t.cos() + y * t.sin());
            }
        })
    }

    /// `‖ξ‖ + ‖φ‖ + ‖ψ‖ + ‖u‖_{L²(0, α)}`, with left-point sums for `u`.
    pub fn norm(&self, h: f64, steps: usize) -> f64 {
        let u_sq: f64 = (0..steps)
            .map(|n| {
                let t = n as f64 * h;
                self.u_cos.iter().zip(&self.u_sin).map(|(a, b)| (a * t.cos() + b * t.sin()).powi(2)).sum::<f64>() * h
            })
            .sum();
        self.xi.norm() + self.phi.l2_norm_sq().sqrt() + self.psi.l2_norm_sq().sqrt() + u_sq.sqrt()
    }
}

/// `(E∫_0^α‖Y‖²)^{1/2}` with left-point sums, on the direct solver.
pub fn delay_output_norm(spec: &DelaySpec, data: &DelayData, w: &BrownianEnsemble) -> Result<f64> {
    let run = solve_delay_direct(
        spec,
        &InitialState::Fixed(data.xi.clone()),
        &data.phi,
        &data.psi,
        &data.input(),
        w,
    )?;
    let ms = run.outputs.mean_square();
    Ok((ms[..w.steps()].iter().sum::<f64>() * w.dt()).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelayBound {
    pub scales: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Empirical constant: the largest ratio.
    pub c_hat: f64,
    /// Every bundle gives the same ratio at its own scale and at unit scale.
    pub homogeneous: bool,
    pub verdict: bool,
}

/// Ratio of output norm to data norm over `samples` random bundles whose
/// magnitudes spread log-uniformly over a factor of 10.
pub fn delay_wellposed_bound(
    spec: &DelaySpec,
    alpha: f64,
    samples: usize,
    seed: u64,
    paths: usize,
) -> Result<DelayBound> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one data bundle".into()));
    }
    let steps = crate::operators::steps_for(alpha, spec.h)?;
    let w = BrownianEnsemble::sample(seed, spec.h, steps, paths)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 << 62);
    let mut out = DelayBound {
        scales: Vec::new(),
        lhs: Vec::new(),
        rhs: Vec::new(),
        ratios: Vec::new(),
        c_hat: 0.0,
        homogeneous: true,
        verdict: false,
    };
    for i in 0..samples {
        let s = if samples > 1 { 10f64.powf(i as f64 / (samples - 1) as f64) } else { 1.0 };
        let unit = DelayData::random(spec, &mut rng)?;
        let data = unit.scaled(s);
        let (lhs, rhs) = (delay_output_norm(spec, &data, &w)?, data.norm(spec.h, steps));
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        let (l1, r1) = (delay_output_norm(spec, &unit, &w)?, unit.norm(spec.h, steps));
        let unit_ratio = if r1 > 0.0 { l1 / r1 } else { 0.0 };
        out.homogeneous &= (ratio - unit_ratio).abs() <= 1e-9 * unit_ratio.max(1e-300);
        out.scales.push(s);
        out.lhs.push(lhs);
        out.rhs.push(rhs);
        out.ratios.push(ratio);
        out.c_hat = out.c_hat.max(ratio);
    }
    out.verdict = out.homogeneous && out.c_hat.is_finite();
    Ok(out)
}
