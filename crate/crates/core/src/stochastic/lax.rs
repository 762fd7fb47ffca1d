use super::brownian::BrownianEnsemble;
use super::ensemble::{Provenance, TrajectoryEnsemble};
use super::sde::{solve_linear_sde, InitialState, LinearSystemSpec};
use super::AdaptedSignal;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, C64, ZERO};
use crate::operators::{Generator, GridSignal, Repr};

/// State ⊕ input-window space. The window holds `g(s) = u(t + s)` on `nodes`
/// grid points of spacing `h`; its dynamics are the left shift `d/ds` and the
/// state is driven by `B g(0)`.
#[derive(Clone, Debug)]
pub struct LaxPhillips {
    spec: LinearSystemSpec,
    h: f64,
    nodes: usize,
}

pub fn lax_phillips_assemble(spec: &LinearSystemSpec, horizon: f64, nodes: usize) -> Result<LaxPhillips> {
    if matches!(spec.gen.repr(), Repr::ShiftGrid { .. }) {
        return Err(Error::Unsupported("product-space assembly needs a diagonal or dense generator"));
    }
    if !(horizon > 0.0) || nodes < 2 {
        return Err(Error::GridMismatch(format!("input window needs horizon > 0 and ≥ 2 nodes (got {horizon}, {nodes})")));
    }
    Ok(LaxPhillips { spec: spec.clone(), h: horizon / (nodes - 1) as f64, nodes })
}

impl LaxPhillips {
    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn dim(&self) -> usize {
        self.spec.dim() + self.spec.input_dim() * self.nodes
    }

    /// Block generator `[[A, B e_0ᵀ], [0, D]]` with `D` the upwind difference
    /// `(g_{j+1} − g_j)/h` and zero inflow past the window.
    pub fn block_generator(&self) -> Result<Generator> {
        let k = self.spec.dim();
        let m = self.spec.input_dim();
        let n = self.dim();
        let mut a = CMatrix::zeros(n, n);
        a.view_mut((0, 0), (k, k)).copy_from(&self.spec.gen.to_matrix());
        a.view_mut((0, k), (k, m)).copy_from(&self.spec.b.to_matrix());
        let inv = c(1.0 / self.h);
        for j in 0..self.nodes {
            for i in 0..m {
                let row = k + j * m + i;
                a[(row, row)] = -inv;
                if j + 1 < self.nodes {
                    a[(row, row + m)] = inv;
                }
            }
        }
        Generator::dense_auto(a)
    }

    /// Product state `(x, u(t_0), …, u(t_{nodes−1}))`, zero past the end of `u`.
    pub fn embed(&self, x: &CVector, u: &GridSignal) -> Result<CVector> {
        self.check_signal(u)?;
        let k = self.spec.dim();
        let m = self.spec.input_dim();
        let mut out = CVector::zeros(self.dim());
        out.rows_mut(0, k).copy_from(x);
        for j in 0..self.nodes.min(u.steps() + 1) {
            out.rows_mut(k + j * m, m).copy_from(u.at(j));
        }
        Ok(out)
    }

    fn check_signal(&self, u: &GridSignal) -> Result<()> {
        if u.dim() != self.spec.input_dim() {
            return Err(Error::DimensionMismatch { context: "input window", expected: self.spec.input_dim(), found: u.dim() });
        }
        if (u.dt() - self.h).abs() > 1e-12 * self.h {
            return Err(Error::GridMismatch(format!("input step {} differs from window spacing {}", u.dt(), self.h)));
        }
        Ok(())
    }

    /// State component of the product-space simulation. Each step is exact for
    /// the window dynamics: the window shifts by one node and the state sees
    /// the linear interpolant of `g` on the first cell, through `φ1` and `φ2`.
    pub fn simulate(&self, xi: &InitialState, u: &GridSignal, w: &BrownianEnsemble) -> Result<TrajectoryEnsemble> {
        self.check_signal(u)?;
        w.check_grid(self.h, w.steps())?;
        if w.steps() + 1 > self.nodes {
            return Err(Error::GridMismatch(format!(
                "window of {} nodes is shorter than {} steps",
                self.nodes,
                w.steps()
            )));
        }
        let spec = &self.spec;
        let k = spec.dim();
        let prop = spec.gen.propagator(self.h)?;
        let window: Vec<C64> = self.embed(&CVector::zeros(k), u)?.as_slice()[k..].to_vec();
        let m = spec.input_dim();
        let slot = |head: usize, j: usize| -> CVector {
            let idx = head + j;
            if idx < self.nodes {
                CVector::from_column_slice(&window[idx * m..(idx + 1) * m])
            } else {
                CVector::from_element(m, ZERO)
            }
        };
        let noisy = !spec.noise.is_zero();
        let prov = Provenance::new(w.seed(), &format!("lax|{}", spec.describe()));
        TrajectoryEnsemble::collect(w.dt(), w.steps(), 1, k, w.paths(), prov, |p, emit| {
            let mut x = xi.for_path(p, k);
            emit(0, &x);
            for (n, &dw) in w.path(p).iter().enumerate() {
                // The window head advances one node per step.
                let b0 = spec.b.apply(&slot(n, 0));
                let b1 = spec.b.apply(&slot(n, 1));
                let y = if noisy { &x + spec.noise.apply(&x) * c(dw) } else { x.clone() };
                x = prop.apply(&y) + prop.apply_phi1(&b0) - prop.apply_phi2(&b0) + prop.apply_phi2(&b1);
                emit(n + 1, &x);
            }
            Ok(())
        })
    }
}

/// Max-node mean-square gap between the direct mild solution and the state
/// component of the product-space simulation on the same increments.
pub fn lax_crosscheck(spec: &LinearSystemSpec, xi: &InitialState, u: &GridSignal, w: &BrownianEnsemble) -> Result<f64> {
    let lp = lax_phillips_assemble(spec, w.horizon(), w.steps() + 1)?;
    let direct = solve_linear_sde(spec, xi, &AdaptedSignal::from_grid(u.clone()), w)?;
    let product = lp.simulate(xi, u, w)?;
    direct.max_mean_square_diff(&product)
}
