use serde::{Deserialize, Serialize};

use super::generator::{Generator, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, C64, ZERO};

/// How per-mode coefficients attach to the modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// One channel per mode: `(Cx)_k = c_k x_k`.
    Diagonal,
    /// One scalar channel: `Cx = Σ_k c_k x_k` (and `Bu = (b_k u)_k` for controls).
    Lumped,
}

/// Dyadic block ratio at which a per-mode series is declared non-convergent.
/// Terms behaving like `k^{-p}` give ratio `2^{1-p}`, so 1.0 is the `p = 1` boundary.
pub const TAIL_RATIO: f64 = 1.0;
/// Minimum share of the last block in the total before a tail is considered at all.
pub const TAIL_SHARE: f64 = 0.05;

/// Sums of the last two dyadic blocks `(K/4, K/2]` and `(K/2, K]` of nonnegative terms.
#[derive(Clone, Copy, Debug)]
pub struct TailBlocks {
    pub total: f64,
    pub prev: f64,
    pub last: f64,
}

impl TailBlocks {
    pub fn of(terms: &[f64]) -> Self {
        let k = terms.len();
        let half = k / 2;
        let quarter = k / 4;
        Self {
            total: terms.iter().sum(),
            prev: terms[quarter..half].iter().sum(),
            last: terms[half..].iter().sum(),
        }
    }

    pub fn ratio(&self) -> f64 {
        if self.prev > 0.0 {
            self.last / self.prev
        } else if self.last > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    /// `Some(ratio)` when the blocks fail to contract.
    pub fn violation(&self) -> Option<f64> {
        if self.total <= 0.0 || self.last < TAIL_SHARE * self.total {
            return None;
        }
        let r = self.ratio();
        (r >= TAIL_RATIO).then_some(r)
    }

    /// Geometric extrapolation of the discarded tail, infinite when not contracting.
    pub fn tail_estimate(&self) -> f64 {
        let r = self.ratio();
        if r >= 1.0 {
            f64::INFINITY
        } else {
            self.last * r / (1.0 - r)
        }
    }
}

/// `Some(ratio)` when the absolute series over modes does not pass the tail test.
/// Needs at least 8 modes to say anything.
pub fn series_tail_violation(terms: &[f64]) -> Option<f64> {
    if terms.len() < 8 {
        return None;
    }
    TailBlocks::of(terms).violation()
}

/// Growth test on prefix maxima of a nonnegative profile.
pub(crate) fn profile_unbounded(values: &[f64]) -> bool {
    let k = values.len();
    if k < 8 {
        return false;
    }
    let max = |s: &[f64]| s.iter().copied().fold(0.0, f64::max);
    let top = max(&values[k / 2..]);
    top > max(&values[..k / 2]) * (1.0 + 1e-9)
}

fn check_modal(gen: &Generator, len: usize, what: &'static str) -> Result<()> {
    if !gen.is_diagonal() {
        return Err(Error::InvalidParameter(format!(
            "per-mode {what} attaches only to diagonal generators"
        )));
    }
    if len != gen.dim() {
        return Err(Error::DimensionMismatch { context: what, expected: gen.dim(), found: len });
    }
    Ok(())
}

/// Observation operator `C`.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservationOp {
    Modal { coeffs: Vec<C64>, coupling: Coupling },
    Dense(CMatrix),
}

impl ObservationOp {
    pub fn diagonal(coeffs: Vec<C64>) -> Self {
        Self::Modal { coeffs, coupling: Coupling::Diagonal }
    }

    pub fn lumped(coeffs: Vec<C64>) -> Self {
        Self::Modal { coeffs, coupling: Coupling::Lumped }
    }

    pub fn diagonal_real(coeffs: &[f64]) -> Self {
        Self::diagonal(coeffs.iter().map(|&x| c(x)).collect())
    }

    pub fn lumped_real(coeffs: &[f64]) -> Self {
        Self::lumped(coeffs.iter().map(|&x| c(x)).collect())
    }

    /// Diagonal profile `c_k = f(k)`, `k = 1..=modes`.
    pub fn diagonal_profile(modes: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::diagonal((1..=modes).map(|k| c(f(k as f64))).collect())
    }

    pub fn lumped_profile(modes: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::lumped((1..=modes).map(|k| c(f(k as f64))).collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self::Dense(CMatrix::identity(dim, dim))
    }

    pub fn validate_for(&self, gen: &Generator) -> Result<()> {
        match self {
            Self::Modal { coeffs, .. } => check_modal(gen, coeffs.len(), "observation"),
            Self::Dense(m) if m.ncols() != gen.dim() => Err(Error::DimensionMismatch {
                context: "observation",
                expected: gen.dim(),
                found: m.ncols(),
            }),
            Self::Dense(_) => Ok(()),
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Self::Modal { coeffs, .. } => coeffs.len(),
            Self::Dense(m) => m.ncols(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Self::Modal { coeffs, coupling: Coupling::Diagonal } => coeffs.len(),
            Self::Modal { coupling: Coupling::Lumped, .. } => 1,
            Self::Dense(m) => m.nrows(),
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        match self {
            Self::Modal { coeffs, coupling: Coupling::Diagonal } => {
                CMatrix::from_diagonal(&CVector::from_column_slice(coeffs))
            }
            Self::Modal { coeffs, coupling: Coupling::Lumped } => {
                CMatrix::from_row_slice(1, coeffs.len(), coeffs)
            }
            Self::Dense(m) => m.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Modal { coeffs, .. } => coeffs.iter().all(|z| *z == ZERO),
            Self::Dense(m) => m.iter().all(|z| *z == ZERO),
        }
    }

    /// Whether the profile stays bounded as the truncation grows.
    pub fn is_bounded_profile(&self) -> bool {
        match self {
            Self::Modal { coeffs, coupling: Coupling::Diagonal } => {
                !profile_unbounded(&coeffs.iter().map(|z| z.norm()).collect::<Vec<_>>())
            }
            Self::Modal { coeffs, coupling: Coupling::Lumped } => {
                series_tail_violation(&coeffs.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).is_none()
            }
            Self::Dense(_) => true,
        }
    }

    /// Plain application on a represented state.
    pub fn apply(&self, x: &StateVector) -> CVector {
        match self {
            Self::Modal { coeffs, coupling: Coupling::Diagonal } => {
                CVector::from_iterator(x.len(), coeffs.iter().zip(x.iter()).map(|(a, b)| a * b))
            }
            Self::Modal { coeffs, coupling: Coupling::Lumped } => {
                CVector::from_element(1, coeffs.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
            }
            Self::Dense(m) => m * x,
        }
    }

    /// Absolute per-mode terms of the output series.
    pub fn terms(&self, x: &StateVector) -> Option<Vec<f64>> {
        match self {
            Self::Modal { coeffs, coupling: Coupling::Diagonal } => {
                Some(coeffs.iter().zip(x.iter()).map(|(a, b)| (a * b).norm_sqr()).collect())
            }
            Self::Modal { coeffs, coupling: Coupling::Lumped } => {
                Some(coeffs.iter().zip(x.iter()).map(|(a, b)| (a * b).norm()).collect())
            }
            Self::Dense(_) => None,
        }
    }

    /// Domain test: `Some(tail ratio)` when `x` is outside the represented domain.
    pub fn domain_violation(&self, x: &StateVector) -> Option<f64> {
        if self.is_bounded_profile() {
            return None;
        }
        self.terms(x).and_then(|t| series_tail_violation(&t))
    }

    /// Application with the domain test.
    pub fn apply_checked(&self, x: &StateVector, node: usize, path: Option<usize>) -> Result<CVector> {
        if x.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                context: "observation",
                expected: self.state_dim(),
                found: x.len(),
            });
        }
        if let Some(tail_ratio) = self.domain_violation(x) {
            return Err(Error::DomainViolation { node, path, tail_ratio });
        }
        Ok(self.apply(x))
    }
}

/// Control operator `B`.
#[derive(Clone, Debug, PartialEq)]
pub enum ControlOp {
    Modal { coeffs: Vec<C64>, coupling: Coupling },
    Dense(CMatrix),
}

impl ControlOp {
    pub fn diagonal(coeffs: Vec<C64>) -> Self {
        Self::Modal { coeffs, coupling: Coupling::Diagonal }
    }

    pub fn lumped(coeffs: Vec<C64>) -> Self {
        Self::Modal { coeffs, coupling: Coupling::Lumped }
    }

    pub fn lumped_real(coeffs: &[f64]) -> Self {
        Self::lumped(coeffs.iter().map(|&x| c(x)).collect())
    }

    pub fn diagonal_real(coeffs: &[f64]) -> Self {
        Self::diagonal(coeffs.iter().map(|&x| c(x)).collect())
    }

    pub fn lumped_profile(modes: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::lumped((1..=modes).map(|k| c(f(k as f64))).collect())
    }

    pub fn diagonal_profile(modes: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::diagonal((1..=modes).map(|k| c(f(k as f64))).collect())
    }

    pub fn zero(state_dim: usize, input_dim: usize) -> Self {
        Self::Dense(CMatrix::zeros(state_dim, input_dim))
    }

    pub fn validate_for(&self, gen: &Generator) -> Result<()> {
        match self {
            Self::Modal { coeffs, .. } => check_modal(gen, coeffs.len(), "control"),
            Self::Dense(m) if m.nrows() != gen.dim() => Err(Error::DimensionMismatch {
                context: "control",
                expected: gen.dim(),
                found: m.nrows(),
            }),
            Self::Dense(_) => Ok(()),
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Self::Modal { coeffs, .. } => coeffs.len(),
            Self::Dense(m) => m.nrows(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Modal { coeffs, coupling: Coupling::Diagonal } => coeffs.len(),
            Self::Modal { coupling: Coupling::Lumped, .. } => 1,
            Self::Dense(m) => m.ncols(),
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        match self {
            Self::Modal { coeffs, coupling: Coupling::Diagonal } => {
                CMatrix::from_diagonal(&CVector::from_column_slice(coeffs))
            }
            Self::Modal { coeffs, coupling: Coupling::Lumped } => {
                CMatrix::from_column_slice(coeffs.len(), 1, coeffs)
            }
            Self::Dense(m) => m.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Modal { coeffs, .. } => coeffs.iter().all(|z| *z == ZERO),
            Self::Dense(m) => m.iter().all(|z| *z == ZERO),
        }
    }

    /// `Bu` in extrapolated coordinates.
    pub fn apply(&self, u: &CVector) -> CVector {
        match self {
            Self::Modal { coeffs, coupling: Coupling::Diagonal } => {
                CVector::from_iterator(coeffs.len(), coeffs.iter().zip(u.iter()).map(|(a, b)| a * b))
            }
            Self::Modal { coeffs, coupling: Coupling::Lumped } => {
                CVector::from_iterator(coeffs.len(), coeffs.iter().map(|a| a * u[0]))
            }
            Self::Dense(m) => m * u,
        }
    }
}
