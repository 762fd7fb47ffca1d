use rayon::prelude::*;

use super::direct::{input_at, DelayRun, DelaySpec};
use super::measure::SegmentState;
use crate::error::Result;
use crate::linalg::{c, CMatrix, CVector};
use crate::stochastic::{AdaptedSignal, BrownianEnsemble, InitialState, Provenance, TrajectoryEnsemble};

/// Free-delay reformulation on `state ⊕ state segment ⊕ input segment`.
///
/// Segments keep the `N` grid nodes `θ_0..θ_{N-1}`; their value at `θ = 0`
/// is the boundary value (`x` for the state segment, `u` for the input
/// segment). Coupling and output rows act on `Z` plus a direct `u` column for
/// the weight that sits on the `θ = 0` end.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayProduct {
    pub spec: DelaySpec,
    /// `N`.
    pub cells: usize,
    /// `R^μ` and `R^η` rows, `K × dim`.
    pub coupling: CMatrix,
    /// Weight of `R^η` on the boundary value `u`, `K × m`.
    pub coupling_input: CMatrix,
    /// `R^ϑ φ₁ + R^ϖ φ₂` as a `q × dim` row block.
    pub output: CMatrix,
    /// Weight of `R^ϖ` on `u`, `q × m`.
    pub feedthrough: CMatrix,
    /// `b^U = e_last / h` in the input segment, `dim × m`.
    pub control: CMatrix,
}

impl DelayProduct {
    pub fn dim(&self) -> usize {
        let (k, m) = (self.spec.dim(), self.spec.input_dim());
        k + self.cells * (k + m)
    }

    fn seg1(&self, i: usize) -> usize {
        self.spec.dim() * (1 + i)
    }

    fn seg2(&self, i: usize) -> usize {
        let k = self.spec.dim();
        k + self.cells * k + i * self.spec.input_dim()
    }

    /// `Z(0) = (ξ, φ, ψ)`, dropping the `θ = 0` history nodes.
    pub fn embed(&self, x: &CVector, phi: &SegmentState, psi: &SegmentState) -> CVector {
        let mut z = CVector::zeros(self.dim());
        z.rows_mut(0, x.len()).copy_from(x);
        for i in 0..self.cells {
            z.rows_mut(self.seg1(i), x.len()).copy_from(phi.at(i));
            z.rows_mut(self.seg2(i), psi.dim()).copy_from(psi.at(i));
        }
        z
    }

    pub fn state_part(&self, z: &CVector) -> CVector {
        z.rows(0, self.spec.dim()).into_owned()
    }

    /// Dense generator `𝒜_m + 𝒦` on `ker 𝒢`: `A` and the coupling rows on the
    /// state block, upwind differences `(φ(θ_{i+1}) − φ(θ_i))/h` on the
    /// segments with `φ₁(0) = x` and `φ₂(0) = 0`.
    pub fn block_generator(&self) -> CMatrix {
        let (k, m, n, d) = (self.spec.dim(), self.spec.input_dim(), self.cells, self.dim());
        let inv_h = c(1.0 / self.spec.h);
        let mut g = CMatrix::zeros(d, d);
        g.view_mut((0, 0), (k, k)).copy_from(&self.spec.gen.to_matrix());
        g.rows_mut(0, k).zip_apply(&self.coupling.rows(0, k), |a, b| *a += b);
        for i in 0..n {
            for j in 0..k {
                let row = self.seg1(i) + j;
                g[(row, row)] -= inv_h;
                let next = if i + 1 < n { self.seg1(i + 1) + j } else { j };
                g[(row, next)] += inv_h;
            }
            for j in 0..m {
                let row = self.seg2(i) + j;
                g[(row, row)] -= inv_h;
                if i + 1 < n {
                    g[(row, self.seg2(i + 1) + j)] += inv_h;
                }
            }
        }
        g
    }
}

pub fn assemble_delay_product(spec: &DelaySpec) -> Result<DelayProduct> {
    let (k, m, q, n) = (spec.dim(), spec.input_dim(), spec.output_dim(), spec.cells());
    let dim = k + n * (k + m);
    let seg1 = |i: usize| k * (1 + i);
    let seg2 = |i: usize| k + n * k + i * m;
    let nodes = n + 1;

    let mut coupling = CMatrix::zeros(k, dim);
    let mut coupling_input = CMatrix::zeros(k, m);
    for (i, w) in spec.mu.grid_weights(spec.h, nodes)? {
        let col = if i == n { 0 } else { seg1(i) };
        coupling.view_mut((0, col), (k, k)).zip_apply(&w, |a, b| *a += b);
    }
    for (i, w) in spec.eta.grid_weights(spec.h, nodes)? {
        if i == n {
            coupling_input += w;
        } else {
            coupling.view_mut((0, seg2(i)), (k, m)).zip_apply(&w, |a, b| *a += b);
        }
    }

    let mut output = CMatrix::zeros(q, dim);
    let mut feedthrough = CMatrix::zeros(q, m);
    for (i, w) in spec.out_state.grid_weights(spec.h, nodes)? {
        let col = if i == n { 0 } else { seg1(i) };
        output.view_mut((0, col), (q, k)).zip_apply(&w, |a, b| *a += b);
    }
    for (i, w) in spec.out_input.grid_weights(spec.h, nodes)? {
        if i == n {
            feedthrough += w;
        } else {
            output.view_mut((0, seg2(i)), (q, m)).zip_apply(&w, |a, b| *a += b);
        }
    }

    let mut control = CMatrix::zeros(dim, m);
    for j in 0..m {
        control[(seg2(n - 1) + j, j)] = c(1.0 / spec.h);
    }
    Ok(DelayProduct { spec: spec.clone(), cells: n, coupling, coupling_input, output, feedthrough, control })
}

/// Steps `Z`: exact semigroup of the decoupled blocks (`e^{Ah}` on the state,
/// a one-node shift with boundary inflow on the segments, which is what `b^U`
/// integrates to over one cell), the coupling rows by product integration
/// exact for a drift linear over the cell (predictor for the end value), and
/// noise `(Υx, 0, 0)`.
pub fn solve_delay_product(
    product: &DelayProduct,
    xi: &InitialState,
    phi: &SegmentState,
    psi: &SegmentState,
    u: &AdaptedSignal,
    w: &BrownianEnsemble,
) -> Result<DelayRun> {
    let spec = &product.spec;
    spec.check_data(xi, phi, psi, u, w)?;
    let prop = spec.gen.propagator(spec.h)?;
    let (k, m, q, n) = (spec.dim(), spec.input_dim(), spec.output_dim(), product.cells);
    let noisy = !spec.noise.is_zero();
    let drift = |z: &CVector, u: &CVector| &product.coupling * z + &product.coupling_input * u;
    let shift = |z: &mut CVector, x: &CVector, u: &CVector| {
        let (s1, s2) = (product.seg1(0), product.seg2(0));
        z.as_mut_slice().copy_within(s1 + k..s1 + n * k, s1);
        z.rows_mut(product.seg1(n - 1), k).copy_from(x);
        z.as_mut_slice().copy_within(s2 + m..s2 + n * m, s2);
        z.rows_mut(product.seg2(n - 1), m).copy_from(u);
    };

    let runs: Vec<(Vec<CVector>, Vec<CVector>, SegmentState)> = (0..w.paths())
        .into_par_iter()
        .map(|p| {
            let mut z = product.embed(&xi.for_path(p, k), phi, psi);
            let (mut states, mut outputs) = (Vec::with_capacity(w.steps() + 1), Vec::with_capacity(w.steps() + 1));
            let mut wn = 0.0;
            let mut un = input_at(u, w, p, 0, wn);
            for node in 0..=w.steps() {
                let x = product.state_part(&z);
                states.push(x.clone());
                outputs.push(&product.output * &z + &product.feedthrough * &un);
                if node == w.steps() {
                    break;
                }
                let dw = w.increment(p, node);
                let f0 = drift(&z, &un);
                let y = if noisy { &x + spec.noise.apply(&x) * c(dw) } else { x.clone() };
                let free = prop.apply(&y);
                let predicted = &free + prop.apply_phi1(&f0);
                let next_u = input_at(u, w, p, node + 1, wn + dw);
                shift(&mut z, &x, &un);
                z.rows_mut(0, k).copy_from(&predicted);
                let f1 = drift(&z, &next_u);
                let corrected = free + prop.apply_phi1(&f0) + prop.apply_phi2(&(f1 - &f0));
                z.rows_mut(0, k).copy_from(&corrected);
                un = next_u;
                wn += dw;
            }
            let mut seg: Vec<CVector> = (0..n).map(|i| z.rows(product.seg1(i), k).into_owned()).collect();
            seg.push(product.state_part(&z));
            Ok((states, outputs, SegmentState::new(spec.h, seg).expect("segment of N + 1 nodes")))
        })
        .collect::<Result<_>>()?;

    let prov = Provenance::new(w.seed(), &format!("delay-product|{spec:?}|{xi:?}|{phi:?}|{psi:?}"));
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

/// Max-node mean-square gap between the direct state and the first product block.
pub fn delay_crosscheck(
    spec: &DelaySpec,
    xi: &InitialState,
    phi: &SegmentState,
    psi: &SegmentState,
    u: &AdaptedSignal,
    w: &BrownianEnsemble,
) -> Result<f64> {
    let direct = super::direct::solve_delay_direct(spec, xi, phi, psi, u, w)?;
    let product = solve_delay_product(&assemble_delay_product(spec)?, xi, phi, psi, u, w)?;
    direct.states.max_mean_square_diff(&product.states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::measure::DelayMeasure;
    use crate::delay::solve_delay_direct;
    use crate::linalg::{self, real_vector};
    use crate::operators::Generator;
    use crate::stochastic::NoiseOp;

    #[test]
    fn zero_measures_decouple_the_blocks() {
        let spec = DelaySpec::new(
            Generator::from_real_spectrum(&[-1.0, -2.0]).unwrap(),
            DelayMeasure::zero(2, 2),
            DelayMeasure::zero(2, 1),
            DelayMeasure::zero(1, 2),
            DelayMeasure::zero(1, 1),
            1.0,
            NoiseOp::zero(2),
            0.25,
        )
        .unwrap();
        let prod = assemble_delay_product(&spec).unwrap();
        let g = prod.block_generator();
        assert_eq!(prod.dim(), 2 + 4 * 3);
        // State rows carry only A.
        assert!(g.view((0, 2), (2, 12)).iter().all(|z| z.norm() == 0.0));
        // The input segment never sees the state or its segment.
        assert!(g.view((10, 0), (4, 10)).iter().all(|z| z.norm() == 0.0));
        // Its own block is the upwind shift with zero inflow.
        let shift = g.view((10, 10), (4, 4));
        assert_eq!(shift[(0, 0)].re, -4.0);
        assert_eq!(shift[(0, 1)].re, 4.0);
        assert_eq!(shift[(3, 3)].re, -4.0);
        assert_eq!(prod.control[(13, 0)].re, 4.0);
        assert!(prod.output.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn block_generator_flow_matches_the_semigroup_without_delay() {
        let spec = DelaySpec::scalar(-0.5, &[], &[], 0.5, 0.0, 0.125).unwrap();
        let prod = assemble_delay_product(&spec).unwrap();
        let z0 = prod.embed(&real_vector(&[2.0]), &SegmentState::constant(0.5, 0.125, &[1.0]).unwrap(), &SegmentState::zeros(0.5, 0.125, 1).unwrap());
        let z1 = linalg::expm(&(prod.block_generator() * c(1.0))) * z0;
        assert!((z1[0].re - 2.0 * (-0.5f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn output_row_on_constant_segments() {
        let h = 0.1;
        let spec = DelaySpec::new(
            Generator::from_real_spectrum(&[-1.0]).unwrap(),
            DelayMeasure::zero(1, 1),
            DelayMeasure::zero(1, 1),
            DelayMeasure::scaled_identity(1, &[(-0.3, 2.0), (0.0, 0.5)]).unwrap(),
            DelayMeasure::scaled_identity(1, &[(-0.55, 1.5), (0.0, -1.0)]).unwrap(),
            1.0,
            NoiseOp::zero(1),
            h,
        )
        .unwrap();
        let prod = assemble_delay_product(&spec).unwrap();
        let z = prod.embed(&real_vector(&[1.0]), &SegmentState::constant(1.0, h, &[1.0]).unwrap(), &SegmentState::constant(1.0, h, &[1.0]).unwrap());
        let y = &prod.output * &z + &prod.feedthrough * real_vector(&[1.0]);
        assert!((y[0].re - (2.0 + 0.5 + 1.5 - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn unit_delay_benchmark_on_both_routes() {
        let h = 1.0 / 128.0;
        let spec = DelaySpec::scalar(0.0, &[(-1.0, 1.0)], &[], 1.0, 0.0, h).unwrap();
        let phi = SegmentState::constant(1.0, h, &[1.0]).unwrap();
        let psi = SegmentState::zeros(1.0, h, 1).unwrap();
        let w = BrownianEnsemble::sample(0, h, 128, 1).unwrap();
        let xi = InitialState::real(&[1.0]);
        let run = solve_delay_product(&assemble_delay_product(&spec).unwrap(), &xi, &phi, &psi, &AdaptedSignal::zero(1), &w).unwrap();
        assert!((run.states.state(0, 128)[0].re - 2.0).abs() < 1e-12);
        assert!(delay_crosscheck(&spec, &xi, &phi, &psi, &AdaptedSignal::zero(1), &w).unwrap() <= 1e-20);
    }

    fn noisy(h: f64) -> DelaySpec {
        DelaySpec::scalar(-1.0, &[(-0.5, 0.5), (-0.125, -0.3)], &[(-0.25, 1.0)], 0.5, 0.5, h).unwrap()
    }

    #[test]
    fn crosscheck_contracts_with_noise_and_is_reproducible() {
        let u = AdaptedSignal::of_time(1, |t, out| out[0] = c((3.0 * t).sin()));
        let xi = InitialState::real(&[1.0]);
        let mut w = BrownianEnsemble::sample(12, 1.0 / 16.0, 16, 40).unwrap();
        let mut gaps = Vec::new();
        for _ in 0..4 {
            let spec = noisy(w.dt());
            let phi = SegmentState::from_fn(0.5, w.dt(), 1, |t| vec![1.0 + t]).unwrap();
            let psi = SegmentState::from_fn(0.5, w.dt(), 1, |t| vec![(3.0 * t).sin()]).unwrap();
            gaps.push(delay_crosscheck(&spec, &xi, &phi, &psi, &u, &w).unwrap());
            w = w.refined();
        }
        for g in gaps.windows(2) {
            assert!(g[0] / g[1] >= 1.3, "{gaps:?}");
        }
        let spec = noisy(1.0 / 16.0);
        let w = BrownianEnsemble::sample(12, 1.0 / 16.0, 16, 4).unwrap();
        let phi = SegmentState::constant(0.5, 1.0 / 16.0, &[1.0]).unwrap();
        let psi = SegmentState::zeros(0.5, 1.0 / 16.0, 1).unwrap();
        let prod = assemble_delay_product(&spec).unwrap();
        let a = solve_delay_product(&prod, &xi, &phi, &psi, &u, &w).unwrap();
        let b = solve_delay_product(&prod, &xi, &phi, &psi, &u, &w).unwrap();
        assert_eq!(a.states.to_bytes(), b.states.to_bytes());
        let d = solve_delay_direct(&spec, &xi, &phi, &psi, &u, &w).unwrap();
        assert_eq!(a.final_segments.len(), d.final_segments.len());
    }
}
