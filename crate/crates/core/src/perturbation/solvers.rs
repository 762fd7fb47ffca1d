use rayon::prelude::*;

use super::op::PerturbationOp;
use super::semigroup::perturbed_generator;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64};
use crate::operators::{ControlOp, Generator, ObservationOp, Propagator, Repr};
use crate::stochastic::stats::log_log_slope;
use crate::stochastic::{
    BrownianEnsemble, InitialState, LinearSystemSpec, NoiseOp, Provenance, Stepper, TrajectoryEnsemble,
};

/// System driven by the perturbed semigroup, with no input and no output.
fn perturbed_spec(gen: &Generator, p: &PerturbationOp, noise: &NoiseOp) -> Result<LinearSystemSpec> {
    let pg = perturbed_generator(gen, p)?;
    let k = pg.dim();
    LinearSystemSpec::unchecked(pg, ControlOp::zero(k, 1), ObservationOp::Dense(CMatrix::zeros(1, k)), noise.clone())
}

/// Exponential Euler with the perturbed propagator `𝒯(Δt)`.
pub fn solve_perturbed_sde(
    gen: &Generator,
    p: &PerturbationOp,
    noise: &NoiseOp,
    xi: &InitialState,
    w: &BrownianEnsemble,
) -> Result<TrajectoryEnsemble> {
    let spec = perturbed_spec(gen, p, noise)?;
    xi.validate(spec.dim(), w.paths())?;
    let stepper = Stepper::new(&spec, w.dt())?;
    let prov = Provenance::new(w.seed(), &format!("perturbed|{}|{p:?}|{xi:?}", spec.describe()));
    TrajectoryEnsemble::collect(w.dt(), w.steps(), 1, spec.dim(), w.paths(), prov, |q, emit| {
        stepper.run(w, q, xi.for_path(q, spec.dim()), None, emit);
        Ok(())
    })
}

/// One step of the variation-of-constants scheme on the unperturbed propagator:
/// `T(x + ℳx ΔW) + φ1 𝒫x + φ1 B u`.
pub(crate) struct VcfStepper<'a> {
    prop: Propagator,
    p: &'a PerturbationOp,
    noise: &'a NoiseOp,
    b: Option<&'a ControlOp>,
    checked: bool,
}

impl<'a> VcfStepper<'a> {
    pub(crate) fn new(
        gen: &Generator,
        p: &'a PerturbationOp,
        noise: &'a NoiseOp,
        b: Option<&'a ControlOp>,
        dt: f64,
    ) -> Result<Self> {
        if p.dim() != gen.dim() {
            return Err(Error::DimensionMismatch { context: "perturbation", expected: gen.dim(), found: p.dim() });
        }
        noise.validate(gen.dim())?;
        let checked = !p.as_observation().is_bounded_profile();
        Ok(Self { prop: gen.propagator(dt)?, p, noise, b: b.filter(|b| !b.is_zero()), checked })
    }

    pub(crate) fn step(&self, x: &CVector, u: Option<&[C64]>, dw: f64, node: usize, path: usize) -> Result<CVector> {
        let mut next = if self.noise.is_zero() {
            self.prop.apply(x)
        } else {
            self.prop.apply(&(x + self.noise.apply(x) * c(dw)))
        };
        if !self.p.is_zero() {
            let px = if self.checked { self.p.apply_checked(x, node, Some(path))? } else { self.p.apply(x) };
            next += self.prop.apply_phi1(&px);
        }
        if let (Some(b), Some(u)) = (self.b, u) {
            next += self.prop.apply_phi1(&b.apply(&CVector::from_column_slice(u)));
        }
        Ok(next)
    }
}

/// The perturbation as an explicit drift next to the unperturbed semigroup.
pub fn solve_perturbed_vcf(
    gen: &Generator,
    p: &PerturbationOp,
    noise: &NoiseOp,
    xi: &InitialState,
    w: &BrownianEnsemble,
) -> Result<TrajectoryEnsemble> {
    xi.validate(gen.dim(), w.paths())?;
    let stepper = VcfStepper::new(gen, p, noise, None, w.dt())?;
    let prov = Provenance::new(w.seed(), &format!("vcf|{gen:?}|{p:?}|{noise:?}|{xi:?}"));
    TrajectoryEnsemble::collect(w.dt(), w.steps(), 1, gen.dim(), w.paths(), prov, |q, emit| {
        let mut x = xi.for_path(q, gen.dim());
        emit(0, &x);
        for (n, &dw) in w.path(q).iter().enumerate() {
            x = stepper.step(&x, None, dw, n, q)?;
            emit(n + 1, &x);
        }
        Ok(())
    })
}

/// Max over nodes of the path mean, for each of several per-path squared-error rows.
fn max_node_means(rows: Vec<Vec<Vec<f64>>>) -> Vec<f64> {
    let Some(first) = rows.first() else { return Vec::new() };
    let (comps, nodes) = (first.len(), first[0].len());
    (0..comps)
        .map(|k| {
            (0..nodes)
                .map(|n| linalg::pairwise_mean(&rows.iter().map(|r| r[k][n]).collect::<Vec<_>>()))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Max-node mean-square gap between the two perturbed solvers on shared increments.
pub fn vcf_crosscheck(
    gen: &Generator,
    p: &PerturbationOp,
    noise: &NoiseOp,
    xi: &InitialState,
    w: &BrownianEnsemble,
) -> Result<f64> {
    let spec = perturbed_spec(gen, p, noise)?;
    xi.validate(gen.dim(), w.paths())?;
    let exact = Stepper::new(&spec, w.dt())?;
    let vcf = VcfStepper::new(gen, p, noise, None, w.dt())?;
    let rows: Vec<Vec<Vec<f64>>> = (0..w.paths())
        .into_par_iter()
        .map(|q| {
            let mut a = xi.for_path(q, gen.dim());
            let mut b = a.clone();
            let mut err = Vec::with_capacity(w.steps() + 1);
            err.push(0.0);
            for (n, &dw) in w.path(q).iter().enumerate() {
                a = exact.step(&a, None, dw);
                b = vcf.step(&b, None, dw, n, q)?;
                err.push((&a - &b).norm_squared());
            }
            Ok(vec![err])
        })
        .collect::<Result<_>>()?;
    Ok(max_node_means(rows)[0])
}

/// Mean-square distances of the smoothed solutions `X^n` (noise `n R(n, A + 𝒫) ℳ`)
/// to the unsmoothed one.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainReport {
    pub ns: Vec<f64>,
    pub distances: Vec<f64>,
    /// Strictly decreasing along the ladder; otherwise the report is flagged.
    pub decreasing: bool,
    /// Log-log slope of the root-mean-square distances against `n`.
    pub rms_slope: f64,
}

/// `n R(n, 𝒜) ℳ`, keeping the representation where it stays diagonal.
fn smoothed_noise(pg: &Generator, noise: &NoiseOp, n: f64) -> Result<NoiseOp> {
    let lam = c(n);
    Ok(match (pg.repr(), noise) {
        (Repr::Diagonal(e), NoiseOp::Diagonal(d)) => {
            NoiseOp::Diagonal(e.iter().zip(d).map(|(l, m)| lam / (lam - l) * m).collect())
        }
        (_, NoiseOp::Additive(d)) => {
            let v = pg.resolvent_apply(lam, &CVector::from_column_slice(d))? * lam;
            NoiseOp::Additive(v.iter().copied().collect())
        }
        _ => {
            let m = noise.to_matrix();
            let mut out = CMatrix::zeros(m.nrows(), m.ncols());
            for j in 0..m.ncols() {
                out.set_column(j, &(pg.resolvent_apply(lam, &m.column(j).into_owned())? * lam));
            }
            NoiseOp::Dense(out)
        }
    })
}

pub fn yosida_chain_study(
    gen: &Generator,
    p: &PerturbationOp,
    noise: &NoiseOp,
    xi: &InitialState,
    w: &BrownianEnsemble,
    ns: &[f64],
) -> Result<ChainReport> {
    let base = perturbed_spec(gen, p, noise)?;
    xi.validate(gen.dim(), w.paths())?;
    let omega = base.gen.growth_bound();
    if let Some(&bad) = ns.iter().find(|&&n| !(n > omega)) {
        return Err(Error::InvalidParameter(format!("ladder value {bad} must exceed the growth bound {omega}")));
    }
    let rungs: Vec<LinearSystemSpec> = ns
        .iter()
        .map(|&n| perturbed_spec(gen, p, &smoothed_noise(&base.gen, noise, n)?))
        .collect::<Result<_>>()?;
    let base_step = Stepper::new(&base, w.dt())?;
    let steps: Vec<Stepper> = rungs.iter().map(|s| Stepper::new(s, w.dt())).collect::<Result<_>>()?;

    let rows: Vec<Vec<Vec<f64>>> = (0..w.paths())
        .into_par_iter()
        .map(|q| {
            let mut x = xi.for_path(q, gen.dim());
            let mut xs = vec![x.clone(); steps.len()];
            let mut err = vec![vec![0.0]; steps.len()];
            for &dw in w.path(q) {
                x = base_step.step(&x, None, dw);
                for (k, s) in steps.iter().enumerate() {
                    xs[k] = s.step(&xs[k], None, dw);
                    err[k].push((&xs[k] - &x).norm_squared());
                }
            }
            err
        })
        .collect();
    let distances = max_node_means(rows);
    let decreasing = distances.windows(2).all(|d| d[1] < d[0]);
    let rms: Vec<f64> = distances.iter().map(|d| d.sqrt()).collect();
    let rms_slope = if rms.iter().all(|&d| d > 0.0) && ns.len() >= 2 { log_log_slope(ns, &rms) } else { f64::NAN };
    Ok(ChainReport { ns: ns.to_vec(), distances, decreasing, rms_slope })
}
