use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::constants::{
    a_tau, delta_alpha, det_observability_constant, gronwall_upsilon, h_margin, theta_threshold, threshold_root,
    UPSILON_FORMULA,
};
use super::solver::{check_finite, SemilinearSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, pairwise_mean, CVector};
use crate::operators::obs_admissibility_constant;
use crate::stochastic::BrownianEnsemble;

/// Multiplicative slack on every Monte Carlo verdict.
pub const SLACK: f64 = 0.10;
/// Additive slack in standard errors.
pub const SE_BANDS: f64 = 4.0;

/// Monte Carlo statistics of two solutions driven by the same increments.
#[derive(Clone, Debug, PartialEq)]
pub struct PairStats {
    pub xi1: CVector,
    pub xi2: CVector,
    /// `‖ξ₁ - ξ₂‖`.
    pub gap: f64,
    /// `(E∫‖C(X₁ - X₂)‖²)^{1/2}`, trapezoidal in time.
    pub output: f64,
    pub output_se: f64,
    /// Same norm after removing the free responses `T(t)ξ`.
    pub nonlinear_output: f64,
    pub nonlinear_se: f64,
    /// `max_t E‖X₁(t) - X₂(t)‖²`.
    pub state_ms: f64,
}

fn se_of_root(samples: &[f64]) -> (f64, f64) {
    let m = pairwise_mean(samples);
    let n = samples.len() as f64;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let root = m.max(0.0).sqrt();
    let se_sq = (var / n).sqrt();
    (root, if root > 0.0 { se_sq / (2.0 * root) } else { se_sq.sqrt() })
}

/// Runs both initial states on every path of `w`.
pub fn pair_stats(spec: &SemilinearSpec, xi1: &CVector, xi2: &CVector, w: &BrownianEnsemble) -> Result<PairStats> {
    let k = spec.dim();
    if xi1.len() != k || xi2.len() != k {
        return Err(Error::DimensionMismatch { context: "pair initial state", expected: k, found: xi1.len() });
    }
    let gap = (xi1 - xi2).norm();
    if gap == 0.0 {
        return Err(Error::InvalidParameter("pair has identical initial states".into()));
    }
    let prop = spec.gen.propagator(w.dt())?;
    let (dt, steps) = (w.dt(), w.steps());
    let per_path: Vec<Result<(f64, f64, Vec<f64>)>> = (0..w.paths())
        .into_par_iter()
        .map(|p| {
            let (mut x1, mut x2, mut free) = (xi1.clone(), xi2.clone(), xi1 - xi2);
            let mut out = 0.0;
            let mut nl = 0.0;
            let mut ms = Vec::with_capacity(steps + 1);
            for n in 0..=steps {
                let d = &x1 - &x2;
                let weight = if n == 0 || n == steps { 0.5 * dt } else { dt };
                out += weight * spec.obs.apply(&d).norm_squared();
                nl += weight * spec.obs.apply(&(&d - &free)).norm_squared();
                ms.push(d.norm_squared());
                if n < steps {
                    let dw = w.increment(p, n);
                    x1 = spec.step(&prop, &x1, dw);
                    x2 = spec.step(&prop, &x2, dw);
                    free = prop.apply(&free);
                    check_finite(&x1, n + 1, p)?;
                    check_finite(&x2, n + 1, p)?;
                }
            }
            Ok((out, nl, ms))
        })
        .collect();
    let mut outs = Vec::with_capacity(w.paths());
    let mut nls = Vec::with_capacity(w.paths());
    let mut ms_sum = vec![0.0; steps + 1];
    for r in per_path {
        let (o, n, ms) = r?;
        outs.push(o);
        nls.push(n);
        for (acc, v) in ms_sum.iter_mut().zip(ms) {
            *acc += v;
        }
    }
    let (output, output_se) = se_of_root(&outs);
    let (nonlinear_output, nonlinear_se) = se_of_root(&nls);
    let paths = w.paths() as f64;
    let state_ms = ms_sum.iter().fold(0.0f64, |a, v| a.max(v / paths));
    Ok(PairStats { xi1: xi1.clone(), xi2: xi2.clone(), gap, output, output_se, nonlinear_output, nonlinear_se, state_ms })
}

/// Pair 0 separates along the weakest Gramian direction; the others along
/// Gaussian directions. Base points are Gaussian.
pub fn sample_pairs(spec: &SemilinearSpec, tau: f64, n_pairs: usize, seed: u64) -> Result<Vec<(CVector, CVector)>> {
    let k = spec.dim();
    let weakest = det_observability_constant(&spec.gen, &spec.obs, tau)?.weakest;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x5a1c);
    let draw = |rng: &mut ChaCha8Rng| CVector::from_fn(k, |_, _| c(rng.sample(StandardNormal)));
    let mut pairs = Vec::with_capacity(n_pairs);
    while pairs.len() < n_pairs {
        let base = draw(&mut rng);
        let dir = if pairs.is_empty() { weakest.clone() } else { draw(&mut rng) };
        if dir.norm() == 0.0 {
            continue;
        }
        let other = &base + dir;
        pairs.push((base, other));
    }
    Ok(pairs)
}

fn check_horizon(w: &BrownianEnsemble, tau: f64) -> Result<()> {
    if (w.horizon() - tau).abs() > 1e-9 * tau.max(1.0) {
        return Err(Error::GridMismatch(format!("ensemble horizon {} differs from {tau}", w.horizon())));
    }
    Ok(())
}

pub fn pair_study(spec: &SemilinearSpec, tau: f64, n_pairs: usize, seed: u64, w: &BrownianEnsemble) -> Result<Vec<PairStats>> {
    check_horizon(w, tau)?;
    sample_pairs(spec, tau, n_pairs, seed)?.iter().map(|(a, b)| pair_stats(spec, a, b, w)).collect()
}

/// Lower-bound heuristic for the stochastic observability constant: the
/// smallest output-difference ratio over the sampled pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaEstimate {
    pub kappa: f64,
    /// Standard error of the minimizing ratio.
    pub se: f64,
    pub pair: (CVector, CVector),
    pub ratios: Vec<f64>,
}

pub fn estimate_kappa(spec: &SemilinearSpec, tau: f64, n_pairs: usize, seed: u64, w: &BrownianEnsemble) -> Result<KappaEstimate> {
    if n_pairs < 20 {
        return Err(Error::InvalidParameter(format!("need at least 20 pairs, got {n_pairs}")));
    }
    Ok(kappa_from(&pair_study(spec, tau, n_pairs, seed, w)?))
}

fn kappa_from(stats: &[PairStats]) -> KappaEstimate {
    let ratios: Vec<f64> = stats.iter().map(|s| s.output / s.gap).collect();
    let i = (0..ratios.len()).fold(0, |b, j| if ratios[j] < ratios[b] { j } else { b });
    KappaEstimate {
        kappa: ratios[i],
        se: stats[i].output_se / stats[i].gap,
        pair: (stats[i].xi1.clone(), stats[i].xi2.clone()),
        ratios,
    }
}

/// Empirical side against its bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub empirical: f64,
    pub se: f64,
    pub bound: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn upper(empirical: f64, se: f64, bound: f64) -> Self {
        Self { empirical, se, bound, holds: empirical <= bound * (1.0 + SLACK) + SE_BANDS * se }
    }
}

/// Data-to-state, data-to-output and nonlinear-term bounds on `[0, α]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsReport {
    pub gamma: f64,
    pub upsilon: f64,
    pub delta: f64,
    pub a: f64,
    pub continuity: BoundCheck,
    pub output: BoundCheck,
    pub nonlinear: BoundCheck,
}

impl BoundsReport {
    pub fn holds(&self) -> bool {
        self.continuity.holds && self.output.holds && self.nonlinear.holds
    }
}

pub fn semilinear_bounds(spec: &SemilinearSpec, alpha: f64, n_pairs: usize, seed: u64, w: &BrownianEnsemble) -> Result<BoundsReport> {
    let stats = pair_study(spec, alpha, n_pairs, seed, w)?;
    let gamma = obs_admissibility_constant(&spec.gen, &spec.obs, alpha)?;
    let upsilon = gronwall_upsilon(&spec.gen, spec.lipschitz, alpha)?;
    let delta = delta_alpha(gamma, upsilon, spec.lipschitz, alpha);
    let a = a_tau(gamma, upsilon, alpha);
    let worst = |f: &dyn Fn(&PairStats) -> (f64, f64)| {
        stats.iter().map(f).fold((0.0f64, 0.0f64), |acc, v| if v.0 > acc.0 { v } else { acc })
    };
    let (cont, _) = worst(&|s| (s.state_ms / (s.gap * s.gap), 0.0));
    let (out, out_se) = worst(&|s| (s.output / s.gap, s.output_se / s.gap));
    let (nl, nl_se) = worst(&|s| (s.nonlinear_output / s.gap, s.nonlinear_se / s.gap));
    Ok(BoundsReport {
        gamma,
        upsilon,
        delta,
        a,
        continuity: BoundCheck::upper(cont, 0.0, upsilon),
        output: BoundCheck::upper(out, out_se, delta),
        nonlinear: BoundCheck::upper(nl, nl_se, a * spec.lipschitz),
    })
}

/// One row of the threshold experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityReport {
    pub lipschitz: f64,
    pub gamma: f64,
    pub upsilon: f64,
    pub delta_alpha: f64,
    pub delta_det: f64,
    pub a_tau: f64,
    /// `δ_det / a_τ` at this row's `υ`.
    pub theta: f64,
    pub h: f64,
    pub kappa: f64,
    pub kappa_se: f64,
    pub kappa_pair: (CVector, CVector),
    /// `None` above the threshold, where no guarantee is claimed.
    pub certified: Option<bool>,
    pub pairs: usize,
    pub paths: usize,
    pub seed: u64,
    pub upsilon_formula: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityExperiment {
    pub tau: f64,
    pub theta_hat: f64,
    pub rows: Vec<ObservabilityReport>,
}

impl ObservabilityExperiment {
    /// First sweep value whose row is not certified.
    pub fn boundary(&self) -> Option<f64> {
        self.rows.iter().find(|r| r.certified != Some(true)).map(|r| r.lipschitz)
    }
}

/// Sweeps `L` over a family of specs sharing one generator and observation.
pub fn observability_experiment(
    family: impl Fn(f64) -> Result<SemilinearSpec>,
    tau: f64,
    sweep: &[f64],
    n_pairs: usize,
    seed: u64,
    w: &BrownianEnsemble,
) -> Result<ObservabilityExperiment> {
    let mut rows = Vec::with_capacity(sweep.len());
    let mut theta_hat = f64::NAN;
    for &l in sweep {
        let spec = family(l)?;
        if theta_hat.is_nan() {
            theta_hat = threshold_root(&spec.gen, &spec.obs, tau)?;
        }
        let gamma = obs_admissibility_constant(&spec.gen, &spec.obs, tau)?;
        let upsilon = gronwall_upsilon(&spec.gen, l, tau)?;
        let delta_det = det_observability_constant(&spec.gen, &spec.obs, tau)?.value;
        let a = a_tau(gamma, upsilon, tau);
        let h = h_margin(delta_det, a, l);
        let est = estimate_kappa(&spec, tau, n_pairs, seed, w)?;
        let certified = (h > 0.0).then(|| est.kappa + SE_BANDS * est.se >= h.sqrt() * (1.0 - SLACK));
        rows.push(ObservabilityReport {
            lipschitz: l,
            gamma,
            upsilon,
            delta_alpha: delta_alpha(gamma, upsilon, l, tau),
            delta_det,
            a_tau: a,
            theta: theta_threshold(delta_det, a),
            h,
            kappa: est.kappa,
            kappa_se: est.se,
            kappa_pair: est.pair,
            certified,
            pairs: n_pairs,
            paths: w.paths(),
            seed,
            upsilon_formula: UPSILON_FORMULA,
        });
    }
    Ok(ObservabilityExperiment { tau, theta_hat, rows })
}
