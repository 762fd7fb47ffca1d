use super::op::{PerturbationKind, PerturbationOp};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CVector};
use crate::operators::{Generator, Propagator, Repr};

/// Generator of the perturbed semigroup, `A + 𝒫` at the truncation.
pub fn perturbed_generator(gen: &Generator, p: &PerturbationOp) -> Result<Generator> {
    if p.dim() != gen.dim() {
        return Err(Error::DimensionMismatch { context: "perturbation", expected: gen.dim(), found: p.dim() });
    }
    match (gen.repr(), p.kind()) {
        (Repr::Diagonal(e), PerturbationKind::Modal(q)) => {
            let eigs: Vec<_> = e.iter().zip(q).map(|(a, b)| a + b).collect();
            let omega = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            Generator::diagonal(eigs, omega)
        }
        (Repr::ShiftGrid { .. }, _) => Err(Error::Unsupported("perturbations of shift-grid generators")),
        _ => Generator::dense_auto(gen.to_matrix() + p.to_matrix()),
    }
}

/// Which construction of `𝒯(t)x` to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SemigroupRoute {
    /// Exponential of `A + 𝒫`.
    Exponential,
    /// Picard iteration of `𝒯(t)x = T(t)x + ∫_0^t T(t−s)𝒫𝒯(s)x ds` with
    /// product integration and Richardson extrapolation in the step.
    Dyson,
}

pub fn perturbed_semigroup(gen: &Generator, p: &PerturbationOp, t: f64, x: &CVector, route: SemigroupRoute) -> Result<CVector> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if x.len() != gen.dim() {
        return Err(Error::DimensionMismatch { context: "state", expected: gen.dim(), found: x.len() });
    }
    match route {
        SemigroupRoute::Exponential => perturbed_generator(gen, p)?.semigroup_apply(t, x),
        SemigroupRoute::Dyson => dyson(gen, p, t, x),
    }
}

/// Both routes and their gap.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteComparison {
    pub exponential: CVector,
    pub dyson: CVector,
    pub gap: f64,
}

pub fn compare_routes(gen: &Generator, p: &PerturbationOp, t: f64, x: &CVector) -> Result<RouteComparison> {
    let exponential = perturbed_semigroup(gen, p, t, x, SemigroupRoute::Exponential)?;
    let dyson = perturbed_semigroup(gen, p, t, x, SemigroupRoute::Dyson)?;
    let gap = (&exponential - &dyson).norm();
    Ok(RouteComparison { exponential, dyson, gap })
}

const PICARD_TOL: f64 = 1e-10;
const PICARD_MAX: usize = 200;
const MAX_RECHAINS: usize = 8;

fn dyson(gen: &Generator, p: &PerturbationOp, t: f64, x: &CVector) -> Result<CVector> {
    if t == 0.0 || p.is_zero() {
        return gen.semigroup_apply(t, x);
    }
    let pm = p.to_matrix();
    let (m_t, delta) = gen.semigroup_bound(t);
    let p_norm = linalg::op_norm(&pm);
    // Chunks on which the Volterra map contracts with factor ≤ 1/2.
    let mut chunk = (0.5 / (m_t * p_norm * delta.max(0.0).exp())).min(t);
    let a_norm = linalg::op_norm(&gen.to_matrix());
    for _ in 0..MAX_RECHAINS {
        let pieces = (t / chunk).ceil().max(1.0) as usize;
        let tau = t / pieces as f64;
        let base = ((tau * (a_norm + p_norm) / 0.1).ceil() as usize).max(8);
        let mut y = x.clone();
        let mut ok = true;
        for _ in 0..pieces {
            match extrapolated_chunk(gen, &pm, tau, &y, base)? {
                Some(next) => y = next,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(y);
        }
        chunk /= 2.0;
    }
    Err(Error::InvalidParameter("Picard iteration did not converge after re-chaining".into()))
}

/// Two Richardson sweeps over steps `n, 2n, 4n` (error terms `h²` and `h⁴`).
fn extrapolated_chunk(gen: &Generator, pm: &linalg::CMatrix, tau: f64, x: &CVector, n: usize) -> Result<Option<CVector>> {
    let mut v = Vec::with_capacity(3);
    for level in 0..3 {
        match picard_chunk(gen, pm, tau, x, n << level)? {
            Some(y) => v.push(y),
            None => return Ok(None),
        }
    }
    let r0 = (&v[1] * c(4.0) - &v[0]) / c(3.0);
    let r1 = (&v[2] * c(4.0) - &v[1]) / c(3.0);
    Ok(Some((r1 * c(16.0) - r0) / c(15.0)))
}

/// Picard iteration on `steps` cells; the convolution integral is exact for the
/// piecewise-linear interpolant of `𝒫y`.
fn picard_chunk(gen: &Generator, pm: &linalg::CMatrix, tau: f64, x: &CVector, steps: usize) -> Result<Option<CVector>> {
    let h = tau / steps as f64;
    let prop: Propagator = gen.propagator(h)?;
    let mut free = Vec::with_capacity(steps + 1);
    free.push(x.clone());
    for i in 0..steps {
        let next = prop.apply(&free[i]);
        free.push(next);
    }
    let scale = free.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let mut y = free.clone();
    for _ in 0..PICARD_MAX {
        let py: Vec<CVector> = y.iter().map(|v| pm * v).collect();
        let mut z = CVector::zeros(x.len());
        let mut next = Vec::with_capacity(steps + 1);
        next.push(free[0].clone());
        for i in 0..steps {
            z = prop.apply(&z) + prop.apply_phi1(&py[i]) - prop.apply_phi2(&py[i]) + prop.apply_phi2(&py[i + 1]);
            next.push(&free[i + 1] + &z);
        }
        let change = y.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        y = next;
        if !change.is_finite() {
            return Ok(None);
        }
        if change <= PICARD_TOL * scale {
            return Ok(y.pop());
        }
    }
    Ok(None)
}
