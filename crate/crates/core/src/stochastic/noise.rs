use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, ZERO};

/// Noise coefficient `ℳ`: a bounded linear map, or a state-independent
/// vector for additive noise.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseOp {
    Diagonal(Vec<C64>),
    Dense(CMatrix),
    Additive(Vec<C64>),
}

impl NoiseOp {
    pub fn zero(dim: usize) -> Self {
        Self::Diagonal(vec![ZERO; dim])
    }

    pub fn scalar_multiple(dim: usize, a: f64) -> Self {
        Self::Diagonal(vec![c(a); dim])
    }

    pub fn diagonal_real(m: &[f64]) -> Self {
        Self::Diagonal(m.iter().map(|&x| c(x)).collect())
    }

    pub fn additive_real(m: &[f64]) -> Self {
        Self::Additive(m.iter().map(|&x| c(x)).collect())
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, Self::Additive(_))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal(d) | Self::Additive(d) => d.len(),
            Self::Dense(m) => m.nrows(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let ok = match self {
            Self::Diagonal(d) | Self::Additive(d) => {
                d.len() == dim && d.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            }
            Self::Dense(m) => m.nrows() == dim && m.ncols() == dim && m.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        };
        if !ok {
            return Err(Error::DimensionMismatch { context: "noise operator", expected: dim, found: self.dim() });
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Diagonal(d) | Self::Additive(d) => d.iter().all(|z| *z == ZERO),
            Self::Dense(m) => m.iter().all(|z| *z == ZERO),
        }
    }

    /// Operator norm of the linear part (zero for additive noise).
    pub fn norm(&self) -> f64 {
        match self {
            Self::Diagonal(d) => d.iter().map(|z| z.norm()).fold(0.0, f64::max),
            Self::Dense(m) => linalg::op_norm(m),
            Self::Additive(_) => 0.0,
        }
    }

    /// Matrix of the linear part.
    pub fn to_matrix(&self) -> CMatrix {
        match self {
            Self::Diagonal(d) => CMatrix::from_diagonal(&CVector::from_column_slice(d)),
            Self::Dense(m) => m.clone(),
            Self::Additive(d) => CMatrix::zeros(d.len(), d.len()),
        }
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        match self {
            Self::Diagonal(d) => CVector::from_iterator(x.len(), d.iter().zip(x.iter()).map(|(a, b)| a * b)),
            Self::Dense(m) => m * x,
            Self::Additive(d) => CVector::from_column_slice(d),
        }
    }
}
