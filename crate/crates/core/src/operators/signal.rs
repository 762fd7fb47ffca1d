use crate::error::{Error, Result};
use crate::linalg::{c, CVector};

/// Deterministic vector-valued signal sampled at `t_n = n·dt`, `n = 0..=steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSignal {
    dt: f64,
    values: Vec<CVector>,
}

impl GridSignal {
    pub fn new(dt: f64, values: Vec<CVector>) -> Result<Self> {
        if !(dt > 0.0) || values.is_empty() {
            return Err(Error::InvalidParameter("signal needs dt > 0 and at least one node".into()));
        }
        let d = values[0].len();
        if let Some(v) = values.iter().find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch { context: "signal", expected: d, found: v.len() });
        }
        Ok(Self { dt, values })
    }

    pub fn from_fn(dt: f64, steps: usize, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let values = (0..=steps)
            .map(|n| {
                let v = f(n as f64 * dt);
                assert_eq!(v.len(), dim, "signal component count");
                CVector::from_iterator(dim, v.into_iter().map(c))
            })
            .collect();
        Self { dt, values }
    }

    pub fn constant(dt: f64, steps: usize, value: &[f64]) -> Self {
        Self::from_fn(dt, steps, value.len(), |_| value.to_vec())
    }

    pub fn zeros(dt: f64, steps: usize, dim: usize) -> Self {
        Self { dt, values: vec![CVector::zeros(dim); steps + 1] }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn values(&self) -> &[CVector] {
        &self.values
    }

    pub fn at(&self, n: usize) -> &CVector {
        &self.values[n]
    }

    /// Node index of `t`, which must lie on the grid.
    pub fn node_of(&self, t: f64) -> Result<usize> {
        node_index(self.dt, t, self.steps())
    }

    /// `u(τ + ·)` for `τ = shift·dt`.
    pub fn shifted(&self, shift: usize) -> Self {
        Self { dt: self.dt, values: self.values[shift.min(self.steps())..].to_vec() }
    }

    pub fn truncated(&self, steps: usize) -> Self {
        Self { dt: self.dt, values: self.values[..=steps.min(self.steps())].to_vec() }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { dt: self.dt, values: self.values.iter().map(|v| v * c(a)).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.values.len() != other.values.len() || (self.dt - other.dt).abs() > 1e-15 {
            return Err(Error::GridMismatch("signals on different grids".into()));
        }
        Ok(Self { dt: self.dt, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() })
    }

    /// Squared L² norm by the trapezoid rule.
    pub fn l2_norm_sq(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let inner: f64 = self.values[1..n - 1].iter().map(|v| v.norm_squared()).sum();
        self.dt * (inner + 0.5 * (self.values[0].norm_squared() + self.values[n - 1].norm_squared()))
    }

    /// Squared L² norm by the left-point rule (piecewise-constant reading).
    pub fn l2_norm_sq_left(&self) -> f64 {
        self.dt * self.values[..self.values.len() - 1].iter().map(|v| v.norm_squared()).sum::<f64>()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn node_index(dt: f64, t: f64, steps: usize) -> Result<usize> {
    let n = (t / dt).round();
    if n < 0.0 || (n * dt - t).abs() > 1e-9 * t.abs().max(1.0) || n as usize > steps {
        return Err(Error::GridMismatch(format!("t = {t} is not a node of the grid with dt = {dt}, {steps} steps")));
    }
    Ok(n as usize)
}

/// Number of steps of size `dt` covering `horizon` exactly.
pub fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("need horizon > 0 and dt > 0 (got {horizon}, {dt})")));
    }
    let n = (horizon / dt).round();
    if (n * dt - horizon).abs() > 1e-9 * horizon {
        return Err(Error::GridMismatch(format!("dt = {dt} does not divide horizon {horizon}")));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trapezoid_norm_of_exponential() {
        let s = GridSignal::from_fn(1e-3, 1000, 1, |t| vec![(-t).exp()]);
        assert_relative_eq!(s.l2_norm_sq(), (1.0 - (-2.0f64).exp()) / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn grid_membership() {
        let s = GridSignal::zeros(0.1, 10, 1);
        assert_eq!(s.node_of(0.3).unwrap(), 3);
        assert!(s.node_of(0.35).is_err());
        assert!(s.node_of(1.1).is_err());
        assert!(steps_for(1.0, 0.3).is_err());
        assert_eq!(steps_for(1.0, 0.125).unwrap(), 8);
    }
}
