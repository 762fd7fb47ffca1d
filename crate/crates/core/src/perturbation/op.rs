use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, ZERO};
use crate::operators::{obs_admissibility_constant, Generator, ObservationOp};

/// Shape of a perturbation `𝒫` of the generator.
#[derive(Clone, Debug, PartialEq)]
pub enum PerturbationKind {
    /// `(𝒫x)_k = p_k x_k`.
    Modal(Vec<C64>),
    /// `𝒫x = d·Σ_k c_k x_k`.
    RankOne { direction: CVector, functional: Vec<C64> },
    Dense(CMatrix),
}

/// Perturbation with its admissibility certificate `γ_𝒫` on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationOp {
    kind: PerturbationKind,
    gamma: f64,
    horizon: f64,
}

impl PerturbationOp {
    /// Rejects perturbations that fail the observation admissibility test for `gen`.
    pub fn new(kind: PerturbationKind, gen: &Generator, horizon: f64) -> Result<Self> {
        let dim = match &kind {
            PerturbationKind::Modal(p) => p.len(),
            PerturbationKind::RankOne { direction, functional } => {
                if direction.len() != functional.len() {
                    return Err(Error::DimensionMismatch {
                        context: "rank-one perturbation",
                        expected: functional.len(),
                        found: direction.len(),
                    });
                }
                functional.len()
            }
            PerturbationKind::Dense(m) => {
                if m.nrows() != m.ncols() {
                    return Err(Error::DimensionMismatch { context: "dense perturbation", expected: m.ncols(), found: m.nrows() });
                }
                m.nrows()
            }
        };
        if dim != gen.dim() {
            return Err(Error::DimensionMismatch { context: "perturbation", expected: gen.dim(), found: dim });
        }
        let mut op = Self { kind, gamma: 0.0, horizon };
        let obs = op.as_observation();
        obs.validate_for(gen)?;
        let scale = match &op.kind {
            PerturbationKind::RankOne { direction, .. } => direction.norm(),
            _ => 1.0,
        };
        let g = obs_admissibility_constant(gen, &obs, horizon)? * scale;
        if !g.is_finite() {
            return Err(Error::NotAdmissible("perturbation fails the observation admissibility test".into()));
        }
        op.gamma = g;
        Ok(op)
    }

    pub fn zero(gen: &Generator) -> Self {
        let kind = if gen.is_diagonal() {
            PerturbationKind::Modal(vec![ZERO; gen.dim()])
        } else {
            PerturbationKind::Dense(CMatrix::zeros(gen.dim(), gen.dim()))
        };
        Self { kind, gamma: 0.0, horizon: 1.0 }
    }

    pub fn modal_real(p: &[f64], gen: &Generator, horizon: f64) -> Result<Self> {
        Self::new(PerturbationKind::Modal(p.iter().map(|&x| c(x)).collect()), gen, horizon)
    }

    pub fn dense(m: CMatrix, gen: &Generator, horizon: f64) -> Result<Self> {
        Self::new(PerturbationKind::Dense(m), gen, horizon)
    }

    pub fn kind(&self) -> &PerturbationKind {
        &self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            PerturbationKind::Modal(p) => p.len(),
            PerturbationKind::RankOne { functional, .. } => functional.len(),
            PerturbationKind::Dense(m) => m.nrows(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PerturbationKind::Modal(p) => p.iter().all(|z| *z == ZERO),
            PerturbationKind::RankOne { direction, functional } => {
                direction.iter().all(|z| *z == ZERO) || functional.iter().all(|z| *z == ZERO)
            }
            PerturbationKind::Dense(m) => m.iter().all(|z| *z == ZERO),
        }
    }

    /// The same map seen as an observation operator, for admissibility and
    /// domain tests.
    pub fn as_observation(&self) -> ObservationOp {
        match &self.kind {
            PerturbationKind::Modal(p) => ObservationOp::diagonal(p.clone()),
            PerturbationKind::RankOne { functional, .. } => ObservationOp::lumped(functional.clone()),
            PerturbationKind::Dense(m) => ObservationOp::Dense(m.clone()),
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        match &self.kind {
            PerturbationKind::Modal(p) => CMatrix::from_diagonal(&CVector::from_column_slice(p)),
            PerturbationKind::RankOne { direction, functional } => {
                direction * CMatrix::from_row_slice(1, functional.len(), functional)
            }
            PerturbationKind::Dense(m) => m.clone(),
        }
    }

    pub fn norm(&self) -> f64 {
        match &self.kind {
            PerturbationKind::Modal(p) => p.iter().map(|z| z.norm()).fold(0.0, f64::max),
            PerturbationKind::RankOne { direction, functional } => direction.norm() * linalg::norm_sq(functional).sqrt(),
            PerturbationKind::Dense(m) => linalg::op_norm(m),
        }
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        match &self.kind {
            PerturbationKind::Modal(p) => CVector::from_iterator(x.len(), p.iter().zip(x.iter()).map(|(a, b)| a * b)),
            PerturbationKind::RankOne { direction, functional } => {
                let s: C64 = functional.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                direction * s
            }
            PerturbationKind::Dense(m) => m * x,
        }
    }

    /// Application with the domain test of unbounded profiles.
    pub fn apply_checked(&self, x: &CVector, node: usize, path: Option<usize>) -> Result<CVector> {
        if let Some(tail_ratio) = self.as_observation().domain_violation(x) {
            return Err(Error::DomainViolation { node, path, tail_ratio });
        }
        Ok(self.apply(x))
    }
}
