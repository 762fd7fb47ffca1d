use rayon::prelude::*;

use super::op::PerturbationOp;
use super::solvers::VcfStepper;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, ZERO};
use crate::operators::{ControlOp, Generator, ObservationOp};
use crate::stochastic::{AdaptedSignal, BrownianEnsemble, InitialState, NoiseOp, Provenance, TrajectoryEnsemble};

/// Which ends of `[0, 1]` carry boundary data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryEnds {
    /// Control at `x = 1`; homogeneous condition at `x = 0`.
    Right,
    /// Controls at `x = 0` and `x = 1`, in that order.
    Both,
}

/// Finite-difference heat layout on `[0, 1]`: `n` interior nodes at
/// `x_j = (j+1)/(n+1)` form the state space; the extended node space is
/// `[interior, boundary]`; the trace reads the boundary part.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySpec {
    interior: usize,
    kappa: f64,
    ends: BoundaryEnds,
    output: CMatrix,
}

impl BoundarySpec {
    /// Observes every interior node.
    pub fn heat(interior: usize, kappa: f64, ends: BoundaryEnds) -> Result<Self> {
        if interior < 2 || !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "boundary layout needs ≥ 2 interior nodes and κ > 0 (got {interior}, {kappa})"
            )));
        }
        Ok(Self { interior, kappa, ends, output: CMatrix::identity(interior, interior) })
    }

    /// Output map on the interior nodes.
    pub fn with_output(mut self, m: CMatrix) -> Result<Self> {
        if m.ncols() != self.interior {
            return Err(Error::DimensionMismatch { context: "boundary output", expected: self.interior, found: m.ncols() });
        }
        self.output = m;
        Ok(self)
    }

    pub fn interior(&self) -> usize {
        self.interior
    }

    pub fn boundary(&self) -> usize {
        match self.ends {
            BoundaryEnds::Right => 1,
            BoundaryEnds::Both => 2,
        }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.interior + 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.interior).map(|j| j as f64 * self.spacing()).collect()
    }

    pub fn output(&self) -> &CMatrix {
        &self.output
    }

    fn coupling(&self) -> f64 {
        self.kappa / self.spacing().powi(2)
    }

    /// Interior indices of the left and right neighbours of each boundary entry.
    fn neighbours(&self) -> Vec<usize> {
        match self.ends {
            BoundaryEnds::Right => vec![self.interior - 1],
            BoundaryEnds::Both => vec![0, self.interior - 1],
        }
    }

    /// Three-point stencil from the extended node space to the interior.
    pub fn apply_stencil(&self, z: &CVector) -> CVector {
        let n = self.interior;
        let s = c(self.coupling());
        let mut out = CVector::from_fn(n, |j, _| {
            let left = if j > 0 { z[j - 1] } else { ZERO };
            let right = if j + 1 < n { z[j + 1] } else { ZERO };
            s * (left - c(2.0) * z[j] + right)
        });
        for (i, &j) in self.neighbours().iter().enumerate() {
            out[j] += s * z[n + i];
        }
        out
    }

    /// Boundary entries of an extended node vector.
    pub fn trace(&self, z: &CVector) -> CVector {
        z.rows(self.interior, self.boundary()).into_owned()
    }

    /// The stencil on the kernel of the trace, with homogeneous boundary values.
    pub fn generator(&self) -> Result<Generator> {
        let n = self.interior;
        let s = self.coupling();
        Generator::dense_auto(CMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => c(-2.0 * s),
            1 => c(s),
            _ => ZERO,
        }))
    }

    /// `B = (λ₀ − A_{−1})D`. On the grid this is the stencil's boundary column
    /// block, whatever the shift.
    pub fn control(&self) -> ControlOp {
        let mut b = CMatrix::zeros(self.interior, self.boundary());
        for (i, &j) in self.neighbours().iter().enumerate() {
            b[(j, i)] += c(self.coupling());
        }
        ControlOp::Dense(b)
    }
}

/// Lift of boundary values to interior nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletMap {
    pub lambda0: f64,
    /// `interior × boundary`.
    pub matrix: CMatrix,
}

impl DirichletMap {
    /// Interior part of `Dv`.
    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    /// `Dv` in the extended node space.
    pub fn lift(&self, v: &CVector) -> CVector {
        let h = self.apply(v);
        CVector::from_iterator(h.len() + v.len(), h.iter().chain(v.iter()).copied())
    }
}

/// Solves `(λ₀ − A_m)h = 0` on the interior with `σh = v`, one tridiagonal
/// solve per boundary entry.
pub fn dirichlet_map(bspec: &BoundarySpec, lambda0: f64) -> Result<DirichletMap> {
    let n = bspec.interior;
    let s = bspec.coupling();
    let lower = vec![-s; n];
    let diag = vec![lambda0 + 2.0 * s; n];
    let upper = vec![-s; n];
    let mut matrix = CMatrix::zeros(n, bspec.boundary());
    for (i, &j) in bspec.neighbours().iter().enumerate() {
        let mut rhs = vec![0.0; n];
        rhs[j] = s;
        let h = linalg::thomas_solve(&lower, &diag, &upper, &rhs).ok_or(Error::SingularLift { lambda0 })?;
        for (k, x) in h.into_iter().enumerate() {
            matrix[(k, i)] = c(x);
        }
    }
    Ok(DirichletMap { lambda0, matrix })
}

/// States, outputs and the empirical constant of the boundary run.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryRun {
    pub states: TrajectoryEnsemble,
    pub outputs: TrajectoryEnsemble,
    /// `(max_t E‖X(t)‖² + E∫‖Y‖²) / (E‖ξ‖² + E∫‖u‖²)`, with left-point sums.
    pub bound_constant: f64,
}

/// `dX = (AX + KX)dt + Bu dt + ℳX dW`, `Y = MX`, stepped by the
/// variation-of-constants scheme on the Dirichlet semigroup.
pub fn solve_boundary_sde(
    bspec: &BoundarySpec,
    k: &CMatrix,
    noise: &NoiseOp,
    xi: &InitialState,
    u: &AdaptedSignal,
    w: &BrownianEnsemble,
) -> Result<BoundaryRun> {
    let n = bspec.interior;
    let gen = bspec.generator()?;
    let p = PerturbationOp::dense(k.clone(), &gen, w.horizon())?;
    let b = bspec.control();
    if u.dim() != bspec.boundary() {
        return Err(Error::DimensionMismatch { context: "boundary input", expected: bspec.boundary(), found: u.dim() });
    }
    u.check_grid(w.dt(), w.steps())?;
    xi.validate(n, w.paths())?;
    let out = ObservationOp::Dense(bspec.output.clone());
    let stepper = VcfStepper::new(&gen, &p, noise, Some(&b), w.dt())?;
    let dt = w.dt();

    struct PathRun {
        states: Vec<CVector>,
        outputs: Vec<CVector>,
        input_energy: f64,
    }
    let runs: Vec<PathRun> = (0..w.paths())
        .into_par_iter()
        .map(|q| {
            let mut x = xi.for_path(q, n);
            let mut buf = vec![ZERO; u.dim()];
            let mut states = vec![x.clone()];
            let mut outputs = vec![out.apply_checked(&x, 0, Some(q))?];
            let mut input_energy = 0.0;
            let mut failure = None;
            w.walk(q, |past, dw| {
                if failure.is_some() {
                    return;
                }
                u.eval(past, &mut buf);
                input_energy += linalg::norm_sq(&buf) * dt;
                let next = stepper
                    .step(&x, Some(&buf), dw, past.node, q)
                    .and_then(|nx| out.apply_checked(&nx, past.node + 1, Some(q)).map(|y| (nx, y)));
                match next {
                    Ok((nx, y)) => {
                        x = nx;
                        states.push(x.clone());
                        outputs.push(y);
                    }
                    Err(e) => failure = Some(e),
                }
            });
            match failure {
                Some(e) => Err(e),
                None => Ok(PathRun { states, outputs, input_energy }),
            }
        })
        .collect::<Result<_>>()?;

    let prov = Provenance::new(w.seed(), &format!("boundary|{bspec:?}|{k:?}|{noise:?}|{xi:?}"));
    let states = TrajectoryEnsemble::collect(dt, w.steps(), 1, n, w.paths(), prov.clone(), |q, emit| {
        runs[q].states.iter().enumerate().for_each(|(j, x)| emit(j, x));
        Ok(())
    })?;
    let outputs = TrajectoryEnsemble::collect(dt, w.steps(), 1, bspec.output.nrows(), w.paths(), prov, |q, emit| {
        runs[q].outputs.iter().enumerate().for_each(|(j, y)| emit(j, y));
        Ok(())
    })?;

    let peak = states.mean_square().into_iter().fold(0.0, f64::max);
    let out_energy = linalg::pairwise_mean(
        &runs.iter().map(|r| r.outputs[..w.steps()].iter().map(|y| y.norm_squared() * dt).sum()).collect::<Vec<f64>>(),
    );
    let xi_energy = states.mean_square()[0];
    let in_energy = linalg::pairwise_mean(&runs.iter().map(|r| r.input_energy).collect::<Vec<_>>());
    let denom = xi_energy + in_energy;
    let bound_constant = if denom > 0.0 { (peak + out_energy) / denom } else { 0.0 };
    Ok(BoundaryRun { states, outputs, bound_constant })
}
