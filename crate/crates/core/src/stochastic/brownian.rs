use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::adapted::Past;
use crate::error::{Error, Result};

/// Word offset separating the bridge levels inside one path's stream.
const LEVEL_STRIDE: u128 = 1 << 40;

/// Increments are snapped to `2^{-QUANTUM_BITS}` times the base standard deviation.
const QUANTUM_BITS: i32 = 44;

/// Seeded Wiener increments on a uniform grid.
///
/// Each path draws from its own ChaCha stream `(seed, path)`. Increments are
/// built by Brownian-bridge refinement from `n0` base steps, where
/// `steps = n0·2^L` with `n0` odd, so the ensemble for `(seed, dt/2, 2·steps)`
/// refines this one: consecutive fine pairs sum exactly to the coarse increments.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianEnsemble {
    seed: u64,
    dt: f64,
    steps: usize,
    paths: usize,
    increments: Vec<f64>,
}

impl BrownianEnsemble {
    pub fn sample(seed: u64, dt: f64, steps: usize, paths: usize) -> Result<Self> {
        if !(dt > 0.0) || steps == 0 || paths == 0 {
            return Err(Error::InvalidParameter(format!(
                "Brownian ensemble needs dt > 0, steps ≥ 1 and paths ≥ 1 (dt {dt}, steps {steps}, paths {paths})"
            )));
        }
        let rows: Vec<Vec<f64>> = (0..paths).into_par_iter().map(|p| path_increments(seed, dt, steps, p)).collect();
        let mut increments = Vec::with_capacity(steps * paths);
        for r in rows {
            increments.extend_from_slice(&r);
        }
        Ok(Self { seed, dt, steps, paths, increments })
    }

    /// Same seed on the halved grid.
    pub fn refined(&self) -> Self {
        Self::sample(self.seed, self.dt / 2.0, self.steps * 2, self.paths).expect("refinement of a valid ensemble")
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn path(&self, p: usize) -> &[f64] {
        &self.increments[p * self.steps..(p + 1) * self.steps]
    }

    pub fn increment(&self, p: usize, n: usize) -> f64 {
        self.increments[p * self.steps + n]
    }

    /// `W(t_n)` on path `p`.
    pub fn value(&self, p: usize, n: usize) -> f64 {
        self.path(p)[..n].iter().sum()
    }

    /// Visits nodes `0..steps` of path `p` with the past at each node and the
    /// increment that follows it.
    pub fn walk(&self, p: usize, mut f: impl FnMut(&Past, f64)) {
        let row = self.path(p);
        let mut w = 0.0;
        for (n, &dw) in row.iter().enumerate() {
            f(&Past::new(p, n, self.dt, w, row), dw);
            w += dw;
        }
    }

    /// Little-endian bytes of all increments, path-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.increments.iter().flat_map(|x| x.to_le_bytes()).collect()
    }

    pub fn check_grid(&self, dt: f64, steps: usize) -> Result<()> {
        if (self.dt - dt).abs() > 1e-12 * dt || self.steps != steps {
            return Err(Error::GridMismatch(format!(
                "Brownian grid (dt {}, {} steps) differs from (dt {dt}, {steps} steps)",
                self.dt, self.steps
            )));
        }
        Ok(())
    }
}

/// Increments of path `p`, generated independently of every other path.
pub fn path_increments(seed: u64, dt: f64, steps: usize, p: usize) -> Vec<f64> {
    let levels = steps.trailing_zeros() as usize;
    let base = steps >> levels;
    let base_dt = dt * (1u64 << levels) as f64;

    // Every increment is an integer multiple of `q`, with |x|/q far below 2^53,
    // so `c - left` is exact and fine pairs sum to the coarse value bit for bit.
    let q = 2f64.powi(base_dt.sqrt().log2().floor() as i32 - QUANTUM_BITS);
    let snap = |x: f64| (x / q).round() * q;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(p as u64);
    let mut cur: Vec<f64> = (0..base).map(|_| snap(base_dt.sqrt() * rng.sample::<f64, _>(StandardNormal))).collect();

    let mut var = base_dt;
    for level in 1..=levels {
        rng.set_word_pos(level as u128 * LEVEL_STRIDE);
        let sd = 0.5 * var.sqrt();
        let mut next = Vec::with_capacity(cur.len() * 2);
        for &c in &cur {
            let left = snap(0.5 * c + sd * rng.sample::<f64, _>(StandardNormal));
            next.push(left);
            next.push(c - left);
        }
        cur = next;
        var *= 0.5;
    }
    cur
}
