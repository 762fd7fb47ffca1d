use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{c, C64, ZERO};
use crate::operators::GridSignal;

/// What an adapted signal may see at node `n` of path `path`: the increments
/// `ΔW_0..ΔW_{n-1}` and nothing after them.
#[derive(Clone, Copy, Debug)]
pub struct Past<'a> {
    pub path: usize,
    pub node: usize,
    pub t: f64,
    pub dt: f64,
    /// `W(t_n)`.
    pub w: f64,
    increments: &'a [f64],
}

impl<'a> Past<'a> {
    /// `full` is the whole increment row of the path; only its first `node`
    /// entries are exposed.
    pub fn new(path: usize, node: usize, dt: f64, w: f64, full: &'a [f64]) -> Self {
        Self { path, node, t: node as f64 * dt, dt, w, increments: &full[..node] }
    }

    pub fn increments(&self) -> &'a [f64] {
        self.increments
    }
}

type Eval = dyn Fn(&Past, &mut [C64]) + Send + Sync;

/// Input- or state-valued process `u[p][n]` built from past increments only.
#[derive(Clone)]
pub struct AdaptedSignal {
    dim: usize,
    grid: Option<(f64, usize)>,
    eval: Arc<Eval>,
}

impl std::fmt::Debug for AdaptedSignal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdaptedSignal").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl AdaptedSignal {
    /// `f` writes the value at node `past.node` into its output slice.
    pub fn new(dim: usize, f: impl Fn(&Past, &mut [C64]) + Send + Sync + 'static) -> Self {
        Self { dim, grid: None, eval: Arc::new(f) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, |_, out| out.fill(ZERO))
    }

    pub fn constant(value: &[f64]) -> Self {
        let v: Vec<C64> = value.iter().map(|&x| c(x)).collect();
        Self::new(v.len(), move |_, out| out.copy_from_slice(&v))
    }

    /// Deterministic function of time.
    pub fn of_time(dim: usize, f: impl Fn(f64, &mut [C64]) + Send + Sync + 'static) -> Self {
        Self::new(dim, move |past, out| f(past.t, out))
    }

    /// Deterministic grid signal, read at the node index.
    pub fn from_grid(signal: GridSignal) -> Self {
        let dim = signal.dim();
        let grid = Some((signal.dt(), signal.steps()));
        let mut s = Self::new(dim, move |past, out| {
            let n = past.node.min(signal.steps());
            out.copy_from_slice(signal.at(n).as_slice());
        });
        s.grid = grid;
        s
    }

    /// Grid-backed signals must sit on the Brownian grid and cover its steps.
    pub fn check_grid(&self, dt: f64, steps: usize) -> Result<()> {
        match self.grid {
            Some((h, n)) if (h - dt).abs() > 1e-12 * dt || n < steps => Err(Error::GridMismatch(format!(
                "signal grid (dt {h}, {n} steps) does not cover (dt {dt}, {steps} steps)"
            ))),
            _ => Ok(()),
        }
    }

    /// Scalar process `g(t, W(t))` times a fixed vector.
    pub fn scalar_times(profile: Vec<C64>, g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(profile.len(), move |past, out| {
            let s = g(past.t, past.w);
            for (o, v) in out.iter_mut().zip(&profile) {
                *o = v * s;
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, past: &Past, out: &mut [C64]) {
        debug_assert_eq!(past.increments().len(), past.node, "adaptedness audit");
        debug_assert_eq!(out.len(), self.dim);
        (self.eval)(past, out)
    }

    pub fn scaled(&self, a: f64) -> Self {
        let inner = self.eval.clone();
        let mut s = Self::new(self.dim, move |past, out| {
            inner(past, out);
            for o in out.iter_mut() {
                *o *= a;
            }
        });
        s.grid = self.grid;
        s
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { context: "adapted sum", expected: self.dim, found: other.dim });
        }
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let dim = self.dim;
        let mut s = Self::new(dim, move |past, out| {
            a(past, out);
            let mut tmp = vec![ZERO; dim];
            b(past, &mut tmp);
            for (o, t) in out.iter_mut().zip(tmp) {
                *o += t;
            }
        });
        s.grid = self.grid.or(other.grid);
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn past_hides_future_increments() {
        let row = [0.1, -0.2, 0.3, 0.4];
        let past = Past::new(0, 2, 0.5, 0.1 - 0.2, &row);
        assert_eq!(past.increments(), &[0.1, -0.2]);
        assert_eq!(past.t, 1.0);
    }

    #[test]
    fn combinators() {
        let row = [0.0; 4];
        let past = Past::new(0, 1, 0.1, 0.0, &row);
        let s = AdaptedSignal::constant(&[1.0, 2.0]).add(&AdaptedSignal::constant(&[0.5, 0.5]).scaled(2.0)).unwrap();
        let mut out = [ZERO; 2];
        s.eval(&past, &mut out);
        assert_eq!(out, [c(2.0), c(3.0)]);
        assert!(AdaptedSignal::zero(1).add(&AdaptedSignal::zero(2)).is_err());
    }
}
