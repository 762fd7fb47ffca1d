use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, ZERO};

/// Coefficient vector in the generator's basis.
pub type StateVector = CVector;

/// Finite representation of a generator.
#[derive(Clone, Debug, PartialEq)]
pub enum Repr {
    /// Eigenvalues in an implicit orthonormal eigenbasis.
    Diagonal(Vec<C64>),
    Dense(CMatrix),
    /// `d/dθ` on the uniform grid `θ_j = -r + j·step`, `j = 0..nodes`,
    /// with left-shift dynamics and zero fill at `θ = 0`.
    ShiftGrid { step: f64, nodes: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    repr: Repr,
    growth_bound: f64,
}

const GROWTH_TOL: f64 = 1e-9;

impl Generator {
    pub fn diagonal(eigs: Vec<C64>, growth_bound: f64) -> Result<Self> {
        if eigs.is_empty() {
            return Err(Error::InvalidParameter("empty spectrum".into()));
        }
        if let Some(l) = eigs.iter().find(|l| !l.re.is_finite() || !l.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite eigenvalue {l}")));
        }
        let top = eigs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        if top > growth_bound + GROWTH_TOL {
            return Err(Error::InvalidParameter(format!(
                "eigenvalue real part {top} exceeds declared growth bound {growth_bound}"
            )));
        }
        Ok(Self { repr: Repr::Diagonal(eigs), growth_bound })
    }

    /// Real spectrum with the growth bound set to its maximum.
    pub fn from_real_spectrum(eigs: &[f64]) -> Result<Self> {
        let omega = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::diagonal(eigs.iter().map(|&x| c(x)).collect(), omega)
    }

    /// `λ_k = -k²`, `k = 1..=modes`.
    pub fn heat(modes: usize) -> Self {
        let eigs: Vec<f64> = (1..=modes).map(|k| -((k * k) as f64)).collect();
        Self::from_real_spectrum(&eigs).expect("heat spectrum is valid")
    }

    pub fn dense(m: CMatrix, growth_bound: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "dense generator must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        let abscissa = linalg::spectral_abscissa(&m);
        let slack = GROWTH_TOL.max(1e-8 * linalg::op_norm(&m));
        if abscissa > growth_bound + slack {
            return Err(Error::InvalidParameter(format!(
                "spectral abscissa {abscissa} exceeds declared growth bound {growth_bound}"
            )));
        }
        Ok(Self { repr: Repr::Dense(m), growth_bound })
    }

    /// Dense generator with the growth bound set to the spectral abscissa.
    pub fn dense_auto(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidParameter("dense generator must be square".into()));
        }
        let omega = linalg::spectral_abscissa(&m);
        Self::dense(m, omega)
    }

    pub fn shift_grid(step: f64, nodes: usize) -> Result<Self> {
        if !(step > 0.0) || nodes < 2 {
            return Err(Error::InvalidParameter(format!(
                "shift grid needs step > 0 and at least 2 nodes (step {step}, nodes {nodes})"
            )));
        }
        Ok(Self { repr: Repr::ShiftGrid { step, nodes }, growth_bound: 0.0 })
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn growth_bound(&self) -> f64 {
        self.growth_bound
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Diagonal(e) => e.len(),
            Repr::Dense(m) => m.nrows(),
            Repr::ShiftGrid { nodes, .. } => *nodes,
        }
    }

    pub fn eigenvalues(&self) -> Option<&[C64]> {
        match &self.repr {
            Repr::Diagonal(e) => Some(e),
            _ => None,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal(_))
    }

    /// Matrix of the represented operator. The shift grid uses the upwind
    /// difference `(φ_{j+1} - φ_j)/h` with `φ(0) = 0`.
    pub fn to_matrix(&self) -> CMatrix {
        match &self.repr {
            Repr::Diagonal(e) => CMatrix::from_diagonal(&CVector::from_column_slice(e)),
            Repr::Dense(m) => m.clone(),
            Repr::ShiftGrid { step, nodes } => {
                let n = *nodes;
                let mut m = CMatrix::zeros(n, n);
                for j in 0..n {
                    m[(j, j)] = c(-1.0 / step);
                    if j + 1 < n {
                        m[(j, j + 1)] = c(1.0 / step);
                    }
                }
                m
            }
        }
    }

    fn check_dim(&self, x: &StateVector, context: &'static str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { context, expected: self.dim(), found: x.len() });
        }
        Ok(())
    }

    /// `T(t)x`.
    pub fn semigroup_apply(&self, t: f64, x: &StateVector) -> Result<StateVector> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        self.check_dim(x, "semigroup_apply")?;
        if t == 0.0 {
            return Ok(x.clone());
        }
        Ok(match &self.repr {
            Repr::Diagonal(e) => {
                CVector::from_iterator(x.len(), e.iter().zip(x.iter()).map(|(l, v)| (l * t).exp() * v))
            }
            Repr::Dense(m) => linalg::expm(&(m * c(t))) * x,
            Repr::ShiftGrid { step, nodes } => shift_values(x.as_slice(), t / step, *nodes),
        })
    }

    /// `R(λ, A)x`.
    pub fn resolvent_apply(&self, lambda: C64, x: &StateVector) -> Result<StateVector> {
        self.check_dim(x, "resolvent_apply")?;
        match &self.repr {
            Repr::Diagonal(e) => {
                let scale = e.iter().map(|l| l.norm()).fold(1.0, f64::max);
                let mut out = CVector::zeros(x.len());
                for (k, l) in e.iter().enumerate() {
                    let d = lambda - l;
                    if d.norm() <= 1e-14 * scale {
                        return Err(Error::SpectrumCollision { lambda: lambda.to_string() });
                    }
                    out[k] = x[k] / d;
                }
                Ok(out)
            }
            Repr::Dense(m) => {
                let k = m.nrows();
                let shifted = CMatrix::identity(k, k) * lambda - m;
                let lu = shifted.clone().lu();
                let y = lu
                    .solve(x)
                    .ok_or_else(|| Error::SpectrumCollision { lambda: lambda.to_string() })?;
                // A numerically singular factorization can still return a value.
                let resid = (&shifted * &y - x).norm();
                if !y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
                    || resid > 1e-6 * x.norm().max(1e-300)
                {
                    return Err(Error::SpectrumCollision { lambda: lambda.to_string() });
                }
                Ok(y)
            }
            Repr::ShiftGrid { step, nodes } => Ok(shift_resolvent(x.as_slice(), lambda, *step, *nodes)),
        }
    }

    /// Precomputed one-step maps for step `dt`.
    pub fn propagator(&self, dt: f64) -> Result<Propagator> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {dt}")));
        }
        let kind = match &self.repr {
            Repr::Diagonal(e) => {
                let exp = e.iter().map(|l| (l * dt).exp()).collect();
                let phi1 = e.iter().map(|l| linalg::phi1_unit(l * dt) * dt).collect();
                let phi2 = e.iter().map(|l| linalg::phi2_unit(l * dt) * dt).collect();
                PropKind::Diagonal { exp, phi1, phi2 }
            }
            Repr::Dense(m) => {
                let (exp, phi1, phi2) = linalg::phi_blocks(m, dt);
                PropKind::Dense { exp, phi1, phi2 }
            }
            Repr::ShiftGrid { step, nodes } => PropKind::Shift { cells: dt / step, nodes: *nodes },
        };
        Ok(Propagator { dt, kind })
    }

    /// Constants `(M, δ)` with `‖T(t)‖ ≤ M e^{δ t}`. Diagonal and shift grids are
    /// contractive up to the growth bound; dense generators are sampled on `[0, horizon]`.
    pub fn semigroup_bound(&self, horizon: f64) -> (f64, f64) {
        match &self.repr {
            Repr::Diagonal(_) | Repr::ShiftGrid { .. } => (1.0, self.growth_bound),
            Repr::Dense(m) => {
                let delta = self.growth_bound;
                let samples = 200;
                let h = horizon.max(1e-12) / samples as f64;
                let step = linalg::expm(&(m * c(h)));
                let mut e = CMatrix::identity(m.nrows(), m.nrows());
                let mut big_m: f64 = 1.0;
                for i in 1..=samples {
                    e = &step * e;
                    big_m = big_m.max(linalg::op_norm(&e) * (-delta * h * i as f64).exp());
                }
                (big_m, delta)
            }
        }
    }
}

fn shift_values(x: &[C64], cells: f64, nodes: usize) -> CVector {
    let last = (nodes - 1) as f64;
    CVector::from_fn(nodes, |j, _| {
        let s = j as f64 + cells;
        if s > last + 1e-9 {
            return ZERO;
        }
        let s = s.min(last);
        let lo = s.floor() as usize;
        let frac = s - lo as f64;
        if frac < 1e-12 || lo + 1 >= nodes {
            x[lo]
        } else {
            x[lo] * (1.0 - frac) + x[lo + 1] * frac
        }
    })
}

fn shift_resolvent(x: &[C64], lambda: C64, h: f64, nodes: usize) -> CVector {
    let z = lambda * h;
    let decay = (-z).exp();
    // ∫_0^h e^{-λt} dt and ∫_0^h t e^{-λt} dt, series-safe near λ = 0.
    let e0 = linalg::phi1_unit(-z) * h;
    let e1 = decay * linalg::phi2_unit(z) * h * h;
    let mut y = CVector::zeros(nodes);
    for j in (0..nodes - 1).rev() {
        let slope = (x[j + 1] - x[j]) / h;
        y[j] = x[j] * e0 + slope * e1 + decay * y[j + 1];
    }
    y
}

#[derive(Clone, Debug)]
enum PropKind {
    Diagonal { exp: Vec<C64>, phi1: Vec<C64>, phi2: Vec<C64> },
    Dense { exp: CMatrix, phi1: CMatrix, phi2: CMatrix },
    Shift { cells: f64, nodes: usize },
}

/// `T(Δt)`, `φ1 = ∫_0^Δt T(s) ds` and `φ2 = (1/Δt)∫_0^Δt (Δt - s) T(s) ds`.
#[derive(Clone, Debug)]
pub struct Propagator {
    dt: f64,
    kind: PropKind,
}

impl Propagator {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        match &self.kind {
            PropKind::Diagonal { exp, .. } => diag_mul(exp, x),
            PropKind::Dense { exp, .. } => exp * x,
            PropKind::Shift { cells, nodes } => shift_values(x.as_slice(), *cells, *nodes),
        }
    }

    pub fn apply_phi1(&self, x: &CVector) -> CVector {
        match &self.kind {
            PropKind::Diagonal { phi1, .. } => diag_mul(phi1, x),
            PropKind::Dense { phi1, .. } => phi1 * x,
            PropKind::Shift { cells, nodes } => shift_quadrature(x, *cells, *nodes, self.dt, false),
        }
    }

    pub fn apply_phi2(&self, x: &CVector) -> CVector {
        match &self.kind {
            PropKind::Diagonal { phi2, .. } => diag_mul(phi2, x),
            PropKind::Dense { phi2, .. } => phi2 * x,
            PropKind::Shift { cells, nodes } => shift_quadrature(x, *cells, *nodes, self.dt, true),
        }
    }

    /// Exponential factors for a diagonal generator.
    pub fn diagonal_factors(&self) -> Option<(&[C64], &[C64], &[C64])> {
        match &self.kind {
            PropKind::Diagonal { exp, phi1, phi2 } => Some((exp, phi1, phi2)),
            _ => None,
        }
    }

    pub fn exp_matrix(&self) -> Option<&CMatrix> {
        match &self.kind {
            PropKind::Dense { exp, .. } => Some(exp),
            _ => None,
        }
    }
}

fn diag_mul(d: &[C64], x: &CVector) -> CVector {
    CVector::from_iterator(x.len(), d.iter().zip(x.iter()).map(|(a, b)| a * b))
}

// Trapezoid quadrature over unit grid cells for the shift grid's integral maps.
fn shift_quadrature(x: &CVector, cells: f64, nodes: usize, dt: f64, weighted: bool) -> CVector {
    let pieces = cells.ceil().max(1.0) as usize;
    let ds = dt / pieces as f64;
    let mut acc = CVector::zeros(nodes);
    for i in 0..=pieces {
        let s = i as f64 * ds;
        let mut w = if i == 0 || i == pieces { 0.5 * ds } else { ds };
        if weighted {
            w *= (dt - s) / dt;
        }
        acc += shift_values(x.as_slice(), s / dt * cells, nodes) * c(w);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_matrix;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn e(k: usize, i: usize) -> CVector {
        let mut v = CVector::zeros(k);
        v[i] = c(1.0);
        v
    }

    #[test]
    fn scalar_decay() {
        let g = Generator::from_real_spectrum(&[-1.0]).unwrap();
        let y = g.semigroup_apply(1.0, &e(1, 0)).unwrap();
        assert_relative_eq!(y[0].re, (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(y[0].re, 0.367879, epsilon = 1e-6);
    }

    #[test]
    fn zero_time_is_identity() {
        let g = Generator::dense_auto(real_matrix(&[&[0.3, 1.0], &[-2.0, -1.0]])).unwrap();
        let x = CVector::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.1)]);
        assert_eq!(g.semigroup_apply(0.0, &x).unwrap(), x);
    }

    #[test]
    fn nilpotent_exponential() {
        // Oracle: I + tN, since N² = 0.
        let n = real_matrix(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let g = Generator::dense(n.clone(), 0.0).unwrap();
        let x = linalg::real_vector(&[0.0, 1.0]);
        let oracle = (CMatrix::identity(2, 2) + n * c(2.0)) * &x;
        let y = g.semigroup_apply(2.0, &x).unwrap();
        assert!((y - oracle).norm() < 1e-14);
        let y = g.semigroup_apply(2.0, &x).unwrap();
        assert_relative_eq!(y[0].re, 2.0, epsilon = 1e-14);
        assert_relative_eq!(y[1].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn negative_time_and_dimension_errors() {
        let g = Generator::heat(3);
        assert!(matches!(g.semigroup_apply(-0.1, &e(3, 0)), Err(Error::NegativeTime(_))));
        assert!(matches!(g.semigroup_apply(0.1, &e(2, 0)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn declared_growth_bound_is_verified() {
        assert!(Generator::diagonal(vec![c(0.5)], 0.0).is_err());
        assert!(Generator::dense(real_matrix(&[&[1.0]]), 0.5).is_err());
        assert!(Generator::dense(real_matrix(&[&[f64::NAN]]), 0.5).is_err());
    }

    #[test]
    fn diagonal_resolvent() {
        let g = Generator::from_real_spectrum(&[-1.0]).unwrap();
        let y = g.resolvent_apply(c(2.0), &e(1, 0)).unwrap();
        assert_relative_eq!(y[0].re, 1.0 / 3.0, epsilon = 1e-15);
        assert!(matches!(g.resolvent_apply(c(-1.0), &e(1, 0)), Err(Error::SpectrumCollision { .. })));
    }

    #[test]
    fn dense_resolvent_against_direct_inverse() {
        // Oracle: (I - N)^{-1} = I + N.
        let n = real_matrix(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let g = Generator::dense(n.clone(), 0.0).unwrap();
        let x = linalg::real_vector(&[1.0, 0.0]);
        let oracle = (CMatrix::identity(2, 2) + n) * &x;
        let y = g.resolvent_apply(c(1.0), &x).unwrap();
        assert!((&y - oracle).norm() < 1e-14);
        assert_relative_eq!(y[0].re, 1.0, epsilon = 1e-14);
        assert!(y[1].norm() < 1e-14);
        assert!(matches!(g.resolvent_apply(c(0.0), &x), Err(Error::SpectrumCollision { .. })));
    }

    #[test]
    fn resolvent_inverts_shifted_generator() {
        let a = real_matrix(&[&[-1.0, 2.0, 0.0], &[0.0, -3.0, 1.0], &[0.5, 0.0, -2.0]]);
        let g = Generator::dense_auto(a.clone()).unwrap();
        let x = CVector::from_vec(vec![C64::new(1.0, -1.0), c(2.0), C64::new(0.0, 0.5)]);
        let lam = C64::new(1.5, 0.7);
        let y = g.resolvent_apply(lam, &x).unwrap();
        let back = &y * lam - a * &y;
        assert!((back - &x).norm() <= 1e-12 * x.norm());
    }

    #[test]
    fn shift_grid_moves_values_left_with_zero_fill() {
        let g = Generator::shift_grid(0.5, 5).unwrap();
        let x = linalg::real_vector(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = g.semigroup_apply(1.0, &x).unwrap();
        let want = [3.0, 4.0, 5.0, 0.0, 0.0];
        for (a, b) in y.iter().zip(want) {
            assert_eq!(a.re, b);
        }
        let y = g.semigroup_apply(0.25, &x).unwrap();
        assert_relative_eq!(y[0].re, 1.5, epsilon = 1e-14);
        assert_relative_eq!(y[3].re, 4.5, epsilon = 1e-14);
        assert_eq!(y[4].re, 0.0);
    }

    #[test]
    fn shift_resolvent_is_exact_for_linear_data() {
        // R(λ)φ(θ) = ∫_0^{-θ} e^{-λt} φ(θ+t) dt, closed form for φ(θ) = θ.
        let (h, n) = (0.25, 9);
        let g = Generator::shift_grid(h, n).unwrap();
        let x = CVector::from_fn(n, |j, _| c(-2.0 + j as f64 * h));
        let lam = 1.3;
        let y = g.resolvent_apply(c(lam), &x).unwrap();
        for j in 0..n {
            let theta = -2.0 + j as f64 * h;
            let s = -theta;
            // ∫_0^s e^{-λt}(θ + t) dt
            let i0 = (1.0 - (-lam * s).exp()) / lam;
            let i1 = (1.0 - (-lam * s).exp() * (1.0 + lam * s)) / (lam * lam);
            assert_relative_eq!(y[j].re, theta * i0 + i1, epsilon = 1e-13);
        }
    }

    #[test]
    fn propagator_matches_semigroup_and_phi_oracles() {
        let a = real_matrix(&[&[-1.0, 0.5], &[0.0, -2.0]]);
        let g = Generator::dense_auto(a.clone()).unwrap();
        let p = g.propagator(0.1).unwrap();
        let x = linalg::real_vector(&[1.0, -1.0]);
        let y = p.apply(&x);
        assert!((y - g.semigroup_apply(0.1, &x).unwrap()).norm() < 1e-14);
        // Simpson oracle for ∫_0^dt e^{As} ds x.
        let n = 400;
        let h = 0.1 / n as f64;
        let mut acc = CVector::zeros(2);
        for i in 0..=n {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += g.semigroup_apply(i as f64 * h, &x).unwrap() * c(w * h / 3.0);
        }
        assert!((p.apply_phi1(&x) - acc).norm() < 1e-12);
    }

    #[test]
    fn zero_eigenvalue_uses_analytic_limit() {
        let g = Generator::from_real_spectrum(&[0.0]).unwrap();
        let p = g.propagator(0.25).unwrap();
        let (_, phi1, phi2) = p.diagonal_factors().unwrap();
        assert_eq!(phi1[0].re, 0.25);
        assert_eq!(phi2[0].re, 0.125);
    }

    proptest! {
        #[test]
        fn semigroup_law_diagonal(
            eigs in prop::collection::vec((-5.0f64..0.5, -3.0f64..3.0), 1..6),
            t in 0.0f64..2.0, s in 0.0f64..2.0,
        ) {
            let e: Vec<C64> = eigs.iter().map(|&(a, b)| C64::new(a, b)).collect();
            let g = Generator::diagonal(e.clone(), 0.5).unwrap();
            let x = CVector::from_fn(e.len(), |i, _| C64::new(1.0 + i as f64, -0.5));
            let lhs = g.semigroup_apply(t + s, &x).unwrap();
            let rhs = g.semigroup_apply(t, &g.semigroup_apply(s, &x).unwrap()).unwrap();
            prop_assert!((&lhs - &rhs).norm() <= 1e-12 * lhs.norm().max(1e-300));
        }

        #[test]
        fn semigroup_law_dense(
            entries in prop::collection::vec(-1.0f64..1.0, 9),
            t in 0.0f64..1.5, s in 0.0f64..1.5,
        ) {
            let a = CMatrix::from_fn(3, 3, |i, j| c(entries[3 * i + j]));
            let g = Generator::dense_auto(a).unwrap();
            let x = linalg::real_vector(&[1.0, -0.3, 0.7]);
            let lhs = g.semigroup_apply(t + s, &x).unwrap();
            let rhs = g.semigroup_apply(t, &g.semigroup_apply(s, &x).unwrap()).unwrap();
            prop_assert!((&lhs - &rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        }

        #[test]
        fn resolvent_identity(
            entries in prop::collection::vec(-1.0f64..1.0, 9),
            l in 3.5f64..10.0, m in 3.5f64..10.0, li in -2.0f64..2.0,
        ) {
            let a = CMatrix::from_fn(3, 3, |i, j| c(entries[3 * i + j]));
            let g = Generator::dense_auto(a).unwrap();
            let x = linalg::real_vector(&[0.2, 1.0, -0.8]);
            let lam = C64::new(l, li);
            let mu = c(m);
            let lhs = g.resolvent_apply(lam, &x).unwrap() - g.resolvent_apply(mu, &x).unwrap();
            let rhs = g.resolvent_apply(lam, &g.resolvent_apply(mu, &x).unwrap()).unwrap() * (mu - lam);
            prop_assert!((lhs - rhs).norm() <= 1e-10);
        }

        #[test]
        fn resolvent_identity_diagonal(l in 0.1f64..50.0, m in 0.1f64..50.0) {
            let g = Generator::heat(16);
            let x = CVector::from_fn(16, |i, _| c(1.0 / (1.0 + i as f64)));
            let lhs = g.resolvent_apply(c(l), &x).unwrap() - g.resolvent_apply(c(m), &x).unwrap();
            let rhs = g.resolvent_apply(c(l), &g.resolvent_apply(c(m), &x).unwrap()).unwrap() * c(m - l);
            prop_assert!((lhs - rhs).norm() <= 1e-10);
        }
    }
}
