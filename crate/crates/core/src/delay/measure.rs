use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

/// Finite atomic measure on `[-r, 0]` with matrix weights of shape `rows × cols`.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayMeasure {
    rows: usize,
    cols: usize,
    atoms: Vec<(f64, CMatrix)>,
}

impl DelayMeasure {
    pub fn new(rows: usize, cols: usize, atoms: Vec<(f64, CMatrix)>) -> Result<Self> {
        for (theta, w) in &atoms {
            if !theta.is_finite() || *theta > 0.0 {
                return Err(Error::InvalidParameter(format!("atom location {theta} is not in [-r, 0]")));
            }
            if w.nrows() != rows || w.ncols() != cols {
                return Err(Error::DimensionMismatch {
                    context: "delay atom weight",
                    expected: rows * cols,
                    found: w.nrows() * w.ncols(),
                });
            }
        }
        Ok(Self { rows, cols, atoms })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Self { rows, cols, atoms: Vec::new() }
    }

    /// Scalar weights times the `dim × dim` identity.
    pub fn scaled_identity(dim: usize, atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(dim, dim, atoms.iter().map(|&(t, w)| (t, CMatrix::identity(dim, dim) * c(w))).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn atoms(&self) -> &[(f64, CMatrix)] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|(_, w)| w.iter().all(|z| z.norm() == 0.0))
    }

    /// `Σ_j ‖W_j‖`.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| linalg::op_norm(w)).sum()
    }

    /// Weights per grid node of a segment with `nodes` points of step `h`
    /// ending at `θ = 0`, off-grid atoms split linearly between neighbours.
    pub fn grid_weights(&self, h: f64, nodes: usize) -> Result<Vec<(usize, CMatrix)>> {
        let r = h * (nodes - 1) as f64;
        let mut out: Vec<(usize, CMatrix)> = Vec::new();
        let mut add = |i: usize, w: CMatrix| match out.iter_mut().find(|(j, _)| *j == i) {
            Some((_, acc)) => *acc += w,
            None => out.push((i, w)),
        };
        for (theta, w) in &self.atoms {
            if *theta < -r * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!("atom location {theta} is below -r = {}", -r)));
            }
            let s = ((theta + r) / h).max(0.0);
            let lo = s.floor();
            let frac = s - lo;
            let lo = lo as usize;
            if frac < 1e-9 || lo + 1 >= nodes {
                add(lo.min(nodes - 1), w.clone());
            } else if frac > 1.0 - 1e-9 {
                add(lo + 1, w.clone());
            } else {
                add(lo, w * c(1.0 - frac));
                add(lo + 1, w * c(frac));
            }
        }
        out.sort_by_key(|(i, _)| *i);
        Ok(out)
    }
}

/// Values of a segment on the grid `θ_i = -r + i h`, `i = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentState {
    h: f64,
    values: Vec<CVector>,
}

/// Number of cells `N = r/h`, rejecting steps that do not divide `r`.
pub fn cells(r: f64, h: f64) -> Result<usize> {
    if !(r > 0.0) || !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("delay needs r > 0 and h > 0 (r {r}, h {h})")));
    }
    let n = (r / h).round();
    if n < 1.0 || (n * h - r).abs() > 1e-9 * r {
        return Err(Error::GridMismatch(format!("step {h} does not divide the delay {r}")));
    }
    Ok(n as usize)
}

impl SegmentState {
    pub fn new(h: f64, values: Vec<CVector>) -> Result<Self> {
        let dim = values.first().map_or(0, |v| v.len());
        if values.len() < 2 || values.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidParameter("segment needs ≥ 2 nodes of one dimension".into()));
        }
        Ok(Self { h, values })
    }

    pub fn from_fn(r: f64, h: f64, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let n = cells(r, h)?;
        Self::new(h, (0..=n).map(|i| linalg::real_vector(&f(-r + i as f64 * h))).collect()).and_then(|s| {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch { context: "segment", expected: dim, found: s.dim() });
            }
            Ok(s)
        })
    }

    pub fn constant(r: f64, h: f64, value: &[f64]) -> Result<Self> {
        Self::from_fn(r, h, value.len(), |_| value.to_vec())
    }

    pub fn zeros(r: f64, h: f64, dim: usize) -> Result<Self> {
        Self::from_fn(r, h, dim, |_| vec![0.0; dim])
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn r(&self) -> f64 {
        self.h * (self.nodes() - 1) as f64
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn values(&self) -> &[CVector] {
        &self.values
    }

    pub fn at(&self, i: usize) -> &CVector {
        &self.values[i]
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { h: self.h, values: self.values.iter().map(|v| v * c(a)).collect() }
    }

    /// Trapezoidal `‖φ‖²_{L²(-r, 0)}`.
    pub fn l2_norm_sq(&self) -> f64 {
        let n = self.values.len();
        let inner: f64 = self.values[1..n - 1].iter().map(|v| v.norm_squared()).sum();
        self.h * (inner + 0.5 * (self.values[0].norm_squared() + self.values[n - 1].norm_squared()))
    }
}

/// `Σ_j W_j φ(θ_j)`, linear interpolation between grid nodes.
pub fn stieltjes_apply(m: &DelayMeasure, phi: &SegmentState) -> Result<CVector> {
    if phi.dim() != m.cols {
        return Err(Error::DimensionMismatch { context: "Stieltjes integrand", expected: m.cols, found: phi.dim() });
    }
    let mut out = CVector::zeros(m.rows);
    for (i, w) in m.grid_weights(phi.h, phi.nodes())? {
        out += w * phi.at(i);
    }
    Ok(out)
}
