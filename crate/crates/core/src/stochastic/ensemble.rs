use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{self, CVector, C64};

/// Where an ensemble came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub spec_hash: String,
}

impl Provenance {
    pub fn new(seed: u64, description: &str) -> Self {
        Self { seed, spec_hash: hash_hex(description.as_bytes()) }
    }
}

pub(crate) fn hash_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// States `X[p][j]` at grid nodes `j·stride`, stored flat and path-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEnsemble {
    dt: f64,
    stride: usize,
    dim: usize,
    paths: usize,
    stored: usize,
    data: Vec<C64>,
    provenance: Provenance,
}

impl TrajectoryEnsemble {
    /// Runs `path_fn(p, emit)` for every path in parallel. `emit(n, x)` is
    /// called once per grid node `n = 0..=steps` in increasing order.
    pub(crate) fn collect<F>(
        dt: f64,
        steps: usize,
        stride: usize,
        dim: usize,
        paths: usize,
        provenance: Provenance,
        path_fn: F,
    ) -> Result<Self>
    where
        F: Fn(usize, &mut dyn FnMut(usize, &CVector)) -> Result<()> + Sync,
    {
        let stride = stride.max(1);
        let stored = steps / stride + 1;
        let rows: Vec<Result<Vec<C64>>> = (0..paths)
            .into_par_iter()
            .map(|p| {
                let mut row = Vec::with_capacity(stored * dim);
                path_fn(p, &mut |n, x| {
                    if n % stride == 0 && n / stride < stored {
                        row.extend_from_slice(x.as_slice());
                    }
                })?;
                Ok(row)
            })
            .collect();
        let mut data = Vec::with_capacity(paths * stored * dim);
        for r in rows {
            let r = r?;
            debug_assert_eq!(r.len(), stored * dim);
            data.extend_from_slice(&r);
        }
        Ok(Self { dt, stride, dim, paths, stored, data, provenance })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    /// Number of stored nodes per path.
    pub fn stored_nodes(&self) -> usize {
        self.stored
    }

    /// Grid index of stored node `j`.
    pub fn grid_node(&self, j: usize) -> usize {
        j * self.stride
    }

    pub fn time(&self, j: usize) -> f64 {
        (j * self.stride) as f64 * self.dt
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn state(&self, p: usize, j: usize) -> &[C64] {
        let start = (p * self.stored + j) * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn state_vector(&self, p: usize, j: usize) -> CVector {
        CVector::from_column_slice(self.state(p, j))
    }

    pub fn final_states(&self) -> Vec<CVector> {
        (0..self.paths).map(|p| self.state_vector(p, self.stored - 1)).collect()
    }

    /// `(1/P) Σ_p ‖X[p][j]‖²` for every stored node.
    pub fn mean_square(&self) -> Vec<f64> {
        (0..self.stored)
            .map(|j| {
                let v: Vec<f64> = (0..self.paths).map(|p| linalg::norm_sq(self.state(p, j))).collect();
                linalg::pairwise_mean(&v)
            })
            .collect()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.paths != other.paths || self.stored != other.stored {
            return Err(Error::GridMismatch(format!(
                "ensembles differ in shape: ({}, {}, {}) vs ({}, {}, {})",
                self.paths, self.stored, self.dim, other.paths, other.stored, other.dim
            )));
        }
        Ok(())
    }

    /// Mean-square difference per stored node.
    pub fn mean_square_diff(&self, other: &Self) -> Result<Vec<f64>> {
        self.check_compatible(other)?;
        Ok((0..self.stored)
            .map(|j| {
                let v: Vec<f64> = (0..self.paths)
                    .map(|p| self.state(p, j).iter().zip(other.state(p, j)).map(|(a, b)| (a - b).norm_sqr()).sum())
                    .collect();
                linalg::pairwise_mean(&v)
            })
            .collect())
    }

    pub fn max_mean_square_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.mean_square_diff(other)?.into_iter().fold(0.0, f64::max))
    }

    /// Largest pathwise `|a - b| / max(|a|, |b|, floor)` over all stored entries.
    pub fn max_relative_diff(&self, other: &Self, floor: f64) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(floor))
            .fold(0.0, f64::max))
    }

    /// Pathwise map over every stored state.
    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { data: self.data.iter().map(|&z| f(z)).collect(), ..self.clone() }
    }

    /// Little-endian bytes of all stored states.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|z| z.re.to_le_bytes().into_iter().chain(z.im.to_le_bytes())).collect()
    }
}
