use serde::{Deserialize, Serialize};

use super::generator::{Generator, Repr};
use super::ops::{series_tail_violation, ControlOp, ObservationOp, TailBlocks};
use super::yosida::YosidaLadder;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64};

/// `𝔾(λ) = C_Λ R(λ, A_{-1}) B` (outputs × inputs).
pub fn transfer_function(gen: &Generator, bop: &ControlOp, cop: &ObservationOp, lambda: C64) -> Result<CMatrix> {
    transfer_with_tail(gen, bop, cop, lambda).map(|(g, _)| g)
}

/// Transfer matrix together with the largest extrapolated tail of its per-mode series.
pub fn transfer_with_tail(gen: &Generator, bop: &ControlOp, cop: &ObservationOp, lambda: C64) -> Result<(CMatrix, f64)> {
    bop.validate_for(gen)?;
    cop.validate_for(gen)?;
    let bm = bop.to_matrix();
    let cm = cop.to_matrix();
    match gen.repr() {
        Repr::Diagonal(e) => {
            let scale = e.iter().map(|l| l.norm()).fold(1.0, f64::max);
            let mut inv = Vec::with_capacity(e.len());
            for l in e {
                let d = lambda - l;
                if d.norm() <= 1e-14 * scale {
                    return Err(Error::SpectrumCollision { lambda: lambda.to_string() });
                }
                inv.push(d.inv());
            }
            let (m, p, k) = (cm.nrows(), bm.ncols(), e.len());
            let mut g = CMatrix::zeros(m, p);
            let mut tail: f64 = 0.0;
            let mut terms = vec![0.0; k];
            for i in 0..m {
                for j in 0..p {
                    let mut acc = linalg::ZERO;
                    for q in 0..k {
                        let t = cm[(i, q)] * inv[q] * bm[(q, j)];
                        terms[q] = t.norm();
                        acc += t;
                    }
                    if let Some(tail_ratio) = series_tail_violation(&terms) {
                        return Err(Error::TruncationInsufficient { tail_ratio, suggested: None });
                    }
                    if k >= 8 {
                        tail = tail.max(TailBlocks::of(&terms).tail_estimate());
                    }
                    g[(i, j)] = acc;
                }
            }
            Ok((g, tail))
        }
        Repr::Dense(a) => {
            let n = a.nrows();
            let shifted = CMatrix::identity(n, n) * lambda - a;
            let x = shifted
                .lu()
                .solve(&bm)
                .ok_or_else(|| Error::SpectrumCollision { lambda: lambda.to_string() })?;
            Ok((cm * x, 0.0))
        }
        Repr::ShiftGrid { .. } => Err(Error::Unsupported("transfer functions of shift-grid generators")),
    }
}

/// Truncation needed so the extrapolated tail drops below `rel_tol` of the partial sum.
pub fn suggested_truncation(terms: &[f64], rel_tol: f64) -> Option<usize> {
    let k = terms.len();
    if k < 8 {
        return None;
    }
    let blocks = TailBlocks::of(terms);
    let r = blocks.ratio();
    if r >= 1.0 {
        return None;
    }
    let mut size = k;
    let mut block = blocks.last;
    let mut tail = blocks.tail_estimate();
    while tail > rel_tol * blocks.total && size < usize::MAX / 4 {
        size *= 2;
        block *= r;
        tail -= block;
    }
    Some(size)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    Regular,
    NonRegular,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub verdict: Regularity,
    /// `(λ_j, ‖𝔾(λ_j)‖)`; stops at the first truncation failure.
    pub history: Vec<(f64, f64)>,
    /// First rung at which the truncation could no longer resolve `𝔾`.
    pub truncated_at: Option<f64>,
}

/// Rungs needed before a truncation failure ends the ladder instead of deciding it.
const MIN_RUNGS: usize = 4;

/// Slope of `log‖𝔾‖` against `log λ` over the late rungs that signals decay.
const DECAY_SLOPE: f64 = -0.25;

/// Decay test for `‖𝔾(λ)‖` along the ladder.
pub fn regularity_check(gen: &Generator, bop: &ControlOp, cop: &ObservationOp, ladder: &YosidaLadder) -> Result<RegularityReport> {
    ladder.validate(gen)?;
    let mut history = Vec::with_capacity(ladder.rungs);
    let mut truncated_at = None;
    for lambda in ladder.lambdas() {
        match transfer_function(gen, bop, cop, c(lambda)) {
            Ok(g) => history.push((lambda, linalg::op_norm(&g))),
            // Past `λ ~ K²` the represented modes cannot resolve the decay any more.
            Err(Error::TruncationInsufficient { .. }) if history.len() >= MIN_RUNGS => {
                truncated_at = Some(lambda);
                break;
            }
            Err(Error::TruncationInsufficient { .. }) => {
                return Ok(RegularityReport { verdict: Regularity::NonRegular, history, truncated_at: Some(lambda) });
            }
            Err(e) => return Err(e),
        }
    }
    let values: Vec<f64> = history.iter().map(|h| h.1).collect();
    let last = *values.last().unwrap();
    if last <= ladder.tol {
        return Ok(RegularityReport { verdict: Regularity::Regular, history, truncated_at });
    }
    let monotone = values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let n = values.len();
    let late = n.saturating_sub(4);
    let slope = (values[n - 1].ln() - values[late].ln()) / (history[n - 1].0.ln() - history[late].0.ln());
    let verdict = if monotone && slope <= DECAY_SLOPE {
        Regularity::Regular
    } else if values[n - 1] > values[0] {
        Regularity::NonRegular
    } else {
        Regularity::Inconclusive
    };
    Ok(RegularityReport { verdict, history, truncated_at })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_operators() {
        let gen = Generator::heat(16);
        let g = transfer_function(&gen, &ControlOp::lumped_real(&[0.0; 16]), &ObservationOp::lumped_real(&[0.0; 16]), c(1.0)).unwrap();
        assert_eq!(g[(0, 0)].norm(), 0.0);
    }

    #[test]
    fn single_mode() {
        let gen = Generator::from_real_spectrum(&[-1.0]).unwrap();
        let g = transfer_function(&gen, &ControlOp::lumped_real(&[1.0]), &ObservationOp::lumped_real(&[1.0]), c(1.0)).unwrap();
        assert_relative_eq!(g[(0, 0)].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn heat_series_with_tail_bound() {
        // Σ_{k≥1} 1/(1+k²) = (π coth π - 1)/2.
        let exact = (std::f64::consts::PI / std::f64::consts::PI.tanh() - 1.0) / 2.0;
        let k = 4096;
        let gen = Generator::heat(k);
        let (g, tail) = transfer_with_tail(&gen, &ControlOp::lumped_real(&vec![1.0; k]), &ObservationOp::lumped_real(&vec![1.0; k]), c(1.0)).unwrap();
        // Integral tail bound: Σ_{k>K} 1/(1+k²) ≤ 1/K.
        assert!(exact - g[(0, 0)].re >= 0.0 && exact - g[(0, 0)].re <= 1.0 / k as f64);
        assert!((g[(0, 0)].re + tail - exact).abs() < 1e-6);
        assert_relative_eq!(exact, 1.07667, epsilon = 1e-5);
    }

    #[test]
    fn dense_matches_diagonal() {
        let diag = Generator::from_real_spectrum(&[-1.0, -3.0]).unwrap();
        let dense = Generator::dense_auto(crate::linalg::real_matrix(&[&[-1.0, 0.0], &[0.0, -3.0]])).unwrap();
        let b = ControlOp::Dense(crate::linalg::real_matrix(&[&[1.0], &[2.0]]));
        let cc = ObservationOp::Dense(crate::linalg::real_matrix(&[&[0.5, -1.0]]));
        let lam = C64::new(0.5, 2.0);
        let g1 = transfer_function(&diag, &b, &cc, lam).unwrap();
        let g2 = transfer_function(&dense, &b, &cc, lam).unwrap();
        assert!((g1 - g2).norm() < 1e-14);
    }

    #[test]
    fn divergent_series_is_reported_with_no_suggestion() {
        let k = 64;
        let gen = Generator::heat(k);
        let b = ControlOp::lumped_profile(k, |k| k);
        let cc = ObservationOp::lumped_profile(k, |k| k);
        assert!(matches!(transfer_function(&gen, &b, &cc, c(1.0)), Err(Error::TruncationInsufficient { suggested: None, .. })));
    }

    #[test]
    fn suggestion_grows_with_tolerance() {
        let terms: Vec<f64> = (1..=64).map(|k| 1.0 / (k * k) as f64).collect();
        let loose = suggested_truncation(&terms, 1e-2).unwrap();
        let tight = suggested_truncation(&terms, 1e-5).unwrap();
        assert!(tight > loose);
    }

    #[test]
    fn regularity_verdicts() {
        let k = 128;
        let gen = Generator::heat(k);
        let ladder = YosidaLadder::default_for(&gen);
        let ones = vec![1.0; k];
        let r = regularity_check(&gen, &ControlOp::lumped_real(&ones), &ObservationOp::lumped_real(&ones), &ladder).unwrap();
        assert_eq!(r.verdict, Regularity::Regular);
        let r = regularity_check(&gen, &ControlOp::lumped_profile(k, |k| k), &ObservationOp::lumped_profile(k, |k| k), &ladder).unwrap();
        assert_ne!(r.verdict, Regularity::Regular);

        let dense = Generator::dense_auto(crate::linalg::real_matrix(&[&[-1.0, 2.0], &[0.0, -0.5]])).unwrap();
        let b = ControlOp::Dense(crate::linalg::real_matrix(&[&[1.0], &[1.0]]));
        let cc = ObservationOp::Dense(crate::linalg::real_matrix(&[&[1.0, 0.0]]));
        let r = regularity_check(&dense, &b, &cc, &YosidaLadder::default_for(&dense)).unwrap();
        assert_eq!(r.verdict, Regularity::Regular);
    }

    #[test]
    fn heat_norm_matches_oracle_decay() {
        // Σ_k 1/(λ + k²) ≈ π/(2√λ) - 1/(2λ) for λ ≪ K².
        let k = 2000;
        let gen = Generator::heat(k);
        let ones = vec![1.0; k];
        for lam in [1e2, 1e3, 1e4] {
            let g = transfer_function(&gen, &ControlOp::lumped_real(&ones), &ObservationOp::lumped_real(&ones), c(lam)).unwrap();
            let oracle: f64 = (1..=k).map(|j| 1.0 / (lam + (j * j) as f64)).sum();
            assert_relative_eq!(g[(0, 0)].re, oracle, epsilon = 1e-12);
            let asym = std::f64::consts::PI / (2.0 * lam.sqrt()) - 1.0 / (2.0 * lam);
            assert!((oracle - asym).abs() < 1.0 / k as f64);
        }
    }
}
