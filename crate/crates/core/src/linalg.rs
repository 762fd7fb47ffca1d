//! Small dense helpers shared by every layer.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn real_vector(v: &[f64]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|&x| c(x)))
}

pub fn real_matrix(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| c(rows[i][j]))
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Matrix exponential (scaling and squaring with a Padé approximant).
pub fn expm(m: &CMatrix) -> CMatrix {
    m.clone().exp()
}

/// `(e^z - 1)/z` with the removable singularity handled by series.
pub fn phi1_unit(z: C64) -> C64 {
    if z.norm() < 0.1 {
        let mut term = ONE;
        let mut sum = ONE;
        for k in 2..16 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `(e^z - 1 - z)/z^2`.
pub fn phi2_unit(z: C64) -> C64 {
    if z.norm() < 0.1 {
        let mut term = c(0.5);
        let mut sum = term;
        for k in 3..18 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

/// `∫_0^t e^{z s} ds`, finite at `z = 0`.
pub fn exp_integral(z: C64, t: f64) -> C64 {
    phi1_unit(z * t) * t
}

/// `exp(A dt)`, `∫_0^dt exp(A s) ds` and `(1/dt)∫_0^dt (dt - s) exp(A s) ds`
/// from one augmented exponential.
pub fn phi_blocks(a: &CMatrix, dt: f64) -> (CMatrix, CMatrix, CMatrix) {
    let k = a.nrows();
    let mut aug = CMatrix::zeros(3 * k, 3 * k);
    aug.view_mut((0, 0), (k, k)).copy_from(&(a * c(dt)));
    for i in 0..k {
        aug[(i, k + i)] = c(dt);
        aug[(k + i, 2 * k + i)] = ONE;
    }
    let e = expm(&aug);
    let e11 = e.view((0, 0), (k, k)).into_owned();
    let e12 = e.view((0, k), (k, k)).into_owned();
    let e13 = e.view((0, 2 * k), (k, k)).into_owned();
    (e11, e12, e13)
}

/// Largest real part over the Schur diagonal.
pub fn spectral_abscissa(a: &CMatrix) -> f64 {
    if a.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let (_, t) = Schur::new(a.clone()).unpack();
    t.diagonal().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn eigenvalues(a: &CMatrix) -> Vec<C64> {
    let (_, t) = Schur::new(a.clone()).unpack();
    t.diagonal().iter().copied().collect()
}

/// Smallest and largest eigenvalues of a Hermitian matrix.
pub fn hermitian_extremes(m: &CMatrix) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let sym = (m + m.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(sym);
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Spectral norm.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let g = m.adjoint() * m;
    hermitian_extremes(&g).1.max(0.0).sqrt()
}

/// Pairwise summation in a fixed order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

pub fn pairwise_mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        pairwise_sum(v) / v.len() as f64
    }
}

/// Thomas algorithm for a tridiagonal system. `lower[0]` and `upper[n-1]` are ignored.
/// Returns `None` on a vanishing pivot.
pub fn thomas_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut piv = diag[0];
    if piv.abs() < 1e-300 {
        return None;
    }
    cp[0] = if n > 1 { upper[0] / piv } else { 0.0 };
    dp[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * cp[i - 1];
        if piv.abs() < 1e-14 * diag[i].abs().max(1.0) {
            return None;
        }
        cp[i] = if i + 1 < n { upper[i] / piv } else { 0.0 };
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / piv;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    Some(x)
}

/// Composite Simpson rule for `∫_0^α e^{A^* t} Q e^{A t} dt`.
pub fn gramian_quadrature(a: &CMatrix, q: &CMatrix, alpha: f64) -> CMatrix {
    let k = a.nrows();
    let scale = op_norm(a).max(1e-12);
    let mut n = ((alpha * scale / 0.02).ceil() as usize).clamp(200, 20000);
    if n % 2 == 1 {
        n += 1;
    }
    let h = alpha / n as f64;
    let step = expm(&(a * c(h)));
    let mut e = CMatrix::identity(k, k);
    let mut acc = CMatrix::zeros(k, k);
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += (e.adjoint() * q * &e) * c(w);
        e = &step * e;
    }
    acc * c(h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn phi_series_matches_closed_form_near_switch() {
        for &z in &[C64::new(0.0999, 0.0), C64::new(-0.05, 0.07), C64::new(0.1001, 0.0)] {
            let direct1 = (z.exp() - 1.0) / z;
            let direct2 = (z.exp() - 1.0 - z) / (z * z);
            assert!((phi1_unit(z) - direct1).norm() < 1e-13);
            assert!((phi2_unit(z) - direct2).norm() < 1e-11);
        }
        assert_eq!(phi1_unit(ZERO), ONE);
        assert_eq!(phi2_unit(ZERO), c(0.5));
    }

    #[test]
    fn phi_blocks_scalar() {
        let a = real_matrix(&[&[-1.5]]);
        let (e, p1, p2) = phi_blocks(&a, 0.3);
        let z = c(-1.5 * 0.3);
        assert_relative_eq!(e[(0, 0)].re, z.exp().re, epsilon = 1e-14);
        assert_relative_eq!(p1[(0, 0)].re, 0.3 * phi1_unit(z).re, epsilon = 1e-14);
        assert_relative_eq!(p2[(0, 0)].re, 0.3 * phi2_unit(z).re, epsilon = 1e-14);
    }

    #[test]
    fn thomas_matches_dense_solve() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [2.5, 2.5, 2.5, 2.5];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let rhs = [1.0, 0.0, 2.0, -1.0];
        let x = thomas_solve(&lower, &diag, &upper, &rhs).unwrap();
        let m = DMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                2.5
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let y = m.lu().solve(&DVector::from_row_slice(&rhs)).unwrap();
        for i in 0..4 {
            assert_relative_eq!(x[i], y[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v.clone()));
        assert_relative_eq!(pairwise_sum(&v), v.iter().sum::<f64>(), epsilon = 1e-12);
    }

    #[test]
    fn scalar_gramian_quadrature() {
        let a = real_matrix(&[&[-1.0]]);
        let q = real_matrix(&[&[1.0]]);
        let g = gramian_quadrature(&a, &q, 1.0);
        assert_relative_eq!(g[(0, 0)].re, (1.0 - (-2.0f64).exp()) / 2.0, epsilon = 1e-10);
    }
}
