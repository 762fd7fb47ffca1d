use serde::{Deserialize, Serialize};

use super::generator::{Generator, StateVector};
use super::ops::ObservationOp;
use crate::error::{Error, Result};
use crate::linalg::{c, CVector};

/// Geometric sequence `λ_j = λ_0 ρ^j`, `j < rungs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YosidaLadder {
    pub lambda0: f64,
    pub ratio: f64,
    pub tol: f64,
    pub rungs: usize,
}

impl YosidaLadder {
    /// `λ_0 = 4·max(1, ω)`, ratio 2, tolerance 1e-6, 20 rungs.
    pub fn default_for(gen: &Generator) -> Self {
        Self { lambda0: 4.0 * gen.growth_bound().max(1.0), ratio: 2.0, tol: 1e-6, rungs: 20 }
    }

    pub fn validate(&self, gen: &Generator) -> Result<()> {
        if !(self.lambda0 > gen.growth_bound()) || !(self.ratio > 1.0) || !(self.tol > 0.0) || self.rungs < 3 {
            return Err(Error::InvalidParameter(format!(
                "ladder needs λ0 > ω = {}, ratio > 1, ε > 0, at least 3 rungs: {self:?}",
                gen.growth_bound()
            )));
        }
        Ok(())
    }

    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.rungs).map(move |j| self.lambda0 * self.ratio.powi(j as i32))
    }
}

/// `C λ R(λ, A) x`.
pub fn yosida_apply(cop: &ObservationOp, gen: &Generator, lambda: f64, x: &StateVector) -> Result<CVector> {
    if !(lambda > gen.growth_bound()) {
        return Err(Error::InvalidParameter(format!(
            "λ = {lambda} must exceed the growth bound {}",
            gen.growth_bound()
        )));
    }
    cop.validate_for(gen)?;
    let r = gen.resolvent_apply(c(lambda), x)?;
    Ok(cop.apply(&r) * c(lambda))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainVerdict {
    InDomain,
    NotInDomain,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub lambda: f64,
    pub norm: f64,
    /// `‖v_j - v_{j-1}‖`, zero on the first rung.
    pub diff: f64,
    /// Difference of successive extrapolated values, when available.
    pub extrapolated_diff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct YosidaLimit {
    pub value: CVector,
    pub verdict: DomainVerdict,
    pub history: Vec<Rung>,
}

/// Consecutive growing raw differences that signal divergence.
const GROWTH_RUNS: usize = 3;
const GROWTH_FACTOR: f64 = 1.2;

/// Ladder test for `lim_{λ→∞} C λ R(λ, A) x`.
///
/// Raw values behave like `L - a/λ + b/λ² - …` once `λ` passes the represented
/// spectrum, so two Richardson sweeps remove the first two corrections; the limit
/// is accepted when successive extrapolations agree to `ε·max(1, ‖value‖)`.
pub fn yosida_limit(cop: &ObservationOp, gen: &Generator, x: &StateVector, ladder: &YosidaLadder) -> Result<YosidaLimit> {
    ladder.validate(gen)?;
    let rho = ladder.ratio;
    let mut raw: Vec<CVector> = Vec::with_capacity(ladder.rungs);
    let mut first: Vec<CVector> = Vec::new();
    let mut second: Vec<CVector> = Vec::new();
    let mut history = Vec::with_capacity(ladder.rungs);
    let mut growth_run = 0usize;
    let mut last_diff = f64::NAN;

    for lambda in ladder.lambdas() {
        let v = yosida_apply(cop, gen, lambda, x)?;
        let diff = raw.last().map_or(0.0, |p| (&v - p).norm());
        if raw.len() >= 2 {
            if diff > GROWTH_FACTOR * last_diff && diff > ladder.tol {
                growth_run += 1;
            } else {
                growth_run = 0;
            }
        }
        last_diff = diff;
        if let Some(p) = raw.last() {
            first.push((&v * c(rho) - p) / c(rho - 1.0));
        }
        if first.len() >= 2 {
            let n = first.len();
            second.push((&first[n - 1] * c(rho * rho) - &first[n - 2]) / c(rho * rho - 1.0));
        }
        let extrapolated_diff = (second.len() >= 2).then(|| {
            let n = second.len();
            (&second[n - 1] - &second[n - 2]).norm()
        });
        raw.push(v);
        history.push(Rung { lambda, norm: raw.last().unwrap().norm(), diff, extrapolated_diff });

        if growth_run >= GROWTH_RUNS {
            return Ok(YosidaLimit {
                value: raw.last().unwrap().clone(),
                verdict: DomainVerdict::NotInDomain,
                history,
            });
        }
        if let Some(d) = extrapolated_diff {
            let value = second.last().unwrap();
            if d <= ladder.tol * value.norm().max(1.0) {
                return Ok(YosidaLimit { value: value.clone(), verdict: DomainVerdict::InDomain, history });
            }
        }
    }

    // Out of rungs: contraction without reaching ε is inconclusive.
    let n = history.len();
    let contracting = n >= 3 && history[n - 1].diff < history[n - 2].diff && history[n - 2].diff < history[n - 3].diff;
    let value = second.last().cloned().unwrap_or_else(|| raw.last().unwrap().clone());
    Ok(YosidaLimit {
        value,
        verdict: if contracting { DomainVerdict::Inconclusive } else { DomainVerdict::NotInDomain },
        history,
    })
}
