use std::collections::VecDeque;

use rayon::prelude::*;

use super::measure::{cells, DelayMeasure, SegmentState};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, ZERO};
use crate::operators::Generator;
use crate::stochastic::{AdaptedSignal, BrownianEnsemble, InitialState, NoiseOp, Past, Provenance, TrajectoryEnsemble};

/// `dX = (AX + ∫dμ X(t+θ) + ∫dη u(t+θ))dt + ΥX dW`,
/// `Y = ∫dϑ X(t+θ) + ∫dϖ u(t+θ)`, on one grid of step `h` for time and delay.
#[derive(Clone, Debug, PartialEq)]
pub struct DelaySpec {
    pub gen: Generator,
    pub mu: DelayMeasure,
    pub eta: DelayMeasure,
    pub out_state: DelayMeasure,
    pub out_input: DelayMeasure,
    pub r: f64,
    pub noise: NoiseOp,
    pub h: f64,
}

impl DelaySpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        gen: Generator,
        mu: DelayMeasure,
        eta: DelayMeasure,
        out_state: DelayMeasure,
        out_input: DelayMeasure,
        r: f64,
        noise: NoiseOp,
        h: f64,
    ) -> Result<Self> {
        let k = gen.dim();
        let shape = |m: &DelayMeasure, rows: usize, cols: usize, what: &'static str| {
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::DimensionMismatch { context: what, expected: rows * cols, found: m.rows() * m.cols() });
            }
            Ok(())
        };
        shape(&mu, k, k, "state delay measure")?;
        shape(&eta, k, eta.cols(), "input delay measure")?;
        shape(&out_state, out_state.rows(), k, "output state measure")?;
        shape(&out_input, out_state.rows(), eta.cols(), "output input measure")?;
        noise.validate(k)?;
        let n = cells(r, h)?;
        for m in [&mu, &eta, &out_state, &out_input] {
            m.grid_weights(h, n + 1)?;
        }
        Ok(Self { gen, mu, eta, out_state, out_input, r, noise, h })
    }

    /// Scalar state and input, output `Y = X(t)`.
    pub fn scalar(a: f64, mu: &[(f64, f64)], eta: &[(f64, f64)], r: f64, noise: f64, h: f64) -> Result<Self> {
        Self::new(
            Generator::from_real_spectrum(&[a])?,
            DelayMeasure::scaled_identity(1, mu)?,
            DelayMeasure::scaled_identity(1, eta)?,
            DelayMeasure::scaled_identity(1, &[(0.0, 1.0)])?,
            DelayMeasure::zero(1, 1),
            r,
            NoiseOp::diagonal_real(&[noise]),
            h,
        )
    }

    pub fn dim(&self) -> usize {
        self.gen.dim()
    }

    pub fn input_dim(&self) -> usize {
        self.eta.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.out_state.rows()
    }

    pub fn cells(&self) -> usize {
        cells(self.r, self.h).expect("validated at construction")
    }

    /// Same system on the grid of step `h`.
    pub fn with_step(&self, h: f64) -> Result<Self> {
        let s = self.clone();
        Self::new(s.gen, s.mu, s.eta, s.out_state, s.out_input, s.r, s.noise, h)
    }

    pub(crate) fn check_data(
        &self,
        xi: &InitialState,
        phi: &SegmentState,
        psi: &SegmentState,
        u: &AdaptedSignal,
        w: &BrownianEnsemble,
    ) -> Result<()> {
        if (w.dt() - self.h).abs() > 1e-12 * self.h {
            return Err(Error::GridMismatch(format!("time step {} differs from the segment step {}", w.dt(), self.h)));
        }
        let n = self.cells();
        for (seg, dim, what) in [(phi, self.dim(), "state history"), (psi, self.input_dim(), "input history")] {
            if seg.nodes() != n + 1 || (seg.h() - self.h).abs() > 1e-12 * self.h {
                return Err(Error::GridMismatch(format!("{what} has {} nodes of step {}", seg.nodes(), seg.h())));
            }
            if seg.dim() != dim {
                return Err(Error::DimensionMismatch { context: what, expected: dim, found: seg.dim() });
            }
        }
        if u.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch { context: "delay input", expected: self.input_dim(), found: u.dim() });
        }
        u.check_grid(w.dt(), w.steps())?;
        xi.validate(self.dim(), w.paths())
    }
}

/// Grid weights of the four measures.
pub(crate) struct Weights {
    pub mu: Vec<(usize, CMatrix)>,
    pub eta: Vec<(usize, CMatrix)>,
    pub out_state: Vec<(usize, CMatrix)>,
    pub out_input: Vec<(usize, CMatrix)>,
}

impl Weights {
    pub fn of(spec: &DelaySpec) -> Result<Self> {
        let nodes = spec.cells() + 1;
        Ok(Self {
            mu: spec.mu.grid_weights(spec.h, nodes)?,
            eta: spec.eta.grid_weights(spec.h, nodes)?,
            out_state: spec.out_state.grid_weights(spec.h, nodes)?,
            out_input: spec.out_input.grid_weights(spec.h, nodes)?,
        })
    }
}

pub(crate) fn apply_weights(w: &[(usize, CMatrix)], seg: &VecDeque<CVector>, rows: usize) -> CVector {
    let mut out = CVector::zeros(rows);
    for (i, m) in w {
        out += m * &seg[*i];
    }
    out
}

/// Input value at node `n` of path `p`.
pub(crate) fn input_at(u: &AdaptedSignal, w: &BrownianEnsemble, p: usize, n: usize, wn: f64) -> CVector {
    let mut buf = vec![ZERO; u.dim()];
    u.eval(&Past::new(p, n, w.dt(), wn, w.path(p)), &mut buf);
    CVector::from_vec(buf)
}

/// States, outputs and the final state segment of every path.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayRun {
    pub states: TrajectoryEnsemble,
    pub outputs: TrajectoryEnsemble,
    pub final_segments: Vec<SegmentState>,
}

/// Method of steps with exponential Euler: the delayed drift is read off the
/// current segments at `t_n` and held over the cell.
pub fn solve_delay_direct(
    spec: &DelaySpec,
    xi: &InitialState,
    phi: &SegmentState,
    psi: &SegmentState,
    u: &AdaptedSignal,
    w: &BrownianEnsemble,
) -> Result<DelayRun> {
    spec.check_data(xi, phi, psi, u, w)?;
    let weights = Weights::of(spec)?;
    let prop = spec.gen.propagator(spec.h)?;
    let (k, q, n) = (spec.dim(), spec.output_dim(), spec.cells());
    let noisy = !spec.noise.is_zero();

    let runs: Vec<(Vec<CVector>, Vec<CVector>, SegmentState)> = (0..w.paths())
        .into_par_iter()
        .map(|p| {
            let mut xseg: VecDeque<CVector> = phi.values()[..n].iter().cloned().collect();
            let mut useg: VecDeque<CVector> = psi.values()[..n].iter().cloned().collect();
            let mut x = xi.for_path(p, k);
            let (mut states, mut outputs) = (Vec::with_capacity(w.steps() + 1), Vec::with_capacity(w.steps() + 1));
            let mut wn = 0.0;
            for node in 0..=w.steps() {
                xseg.push_back(x.clone());
                useg.push_back(input_at(u, w, p, node, wn));
                states.push(x.clone());
                outputs.push(apply_weights(&weights.out_state, &xseg, q) + apply_weights(&weights.out_input, &useg, q));
                if node == w.steps() {
                    break;
                }
                let dw = w.increment(p, node);
                let drift = apply_weights(&weights.mu, &xseg, k) + apply_weights(&weights.eta, &useg, k);
                let y = if noisy { &x + spec.noise.apply(&x) * c(dw) } else { x.clone() };
                x = prop.apply(&y) + prop.apply_phi1(&drift);
                wn += dw;
                xseg.pop_front();
                useg.pop_front();
            }
            let seg = SegmentState::new(spec.h, xseg.into_iter().collect()).expect("segment of N + 1 nodes");
            Ok((states, outputs, seg))
        })
        .collect::<Result<_>>()?;

    let prov = Provenance::new(w.seed(), &format!("delay-direct|{spec:?}|{xi:?}|{phi:?}|{psi:?}"));
    let states = TrajectoryEnsemble::collect(w.dt(), w.steps(), 1, k, w.paths(), prov.clone(), |p, emit| {
        runs[p].0.iter().enumerate().for_each(|(j, x)| emit(j, x));
        Ok(())
    })?;
    let outputs = TrajectoryEnsemble::collect(w.dt(), w.steps(), 1, q, w.paths(), prov, |p, emit| {
        runs[p].1.iter().enumerate().for_each(|(j, y)| emit(j, y));
        Ok(())
    })?;
    Ok(DelayRun { states, outputs, final_segments: runs.into_iter().map(|r| r.2).collect() })
}
