use rayon::prelude::*;

use super::adapted::AdaptedSignal;
use super::brownian::BrownianEnsemble;
use super::stats::mean_se;
use crate::error::Result;
use crate::linalg::{self, CVector, ZERO};

/// Left-point sum `Σ_n f[p][n]·ΔW[p][n]` over the whole Brownian grid, per path.
pub fn ito_integral(f: &AdaptedSignal, w: &BrownianEnsemble) -> Result<Vec<CVector>> {
    f.check_grid(w.dt(), w.steps())?;
    Ok((0..w.paths()).into_par_iter().map(|p| integral_and_energy(f, w, p).0).collect())
}

fn integral_and_energy(f: &AdaptedSignal, w: &BrownianEnsemble, p: usize) -> (CVector, f64) {
    let mut acc = CVector::zeros(f.dim());
    let mut buf = vec![ZERO; f.dim()];
    let mut energy = Vec::with_capacity(w.steps());
    w.walk(p, |past, dw| {
        f.eval(past, &mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b * dw;
        }
        energy.push(linalg::norm_sq(&buf));
    });
    (acc, linalg::pairwise_sum(&energy) * w.dt())
}

/// Both sides of the isometry `E‖∫f dW‖² = E∫‖f‖² dt` with their standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsometryReport {
    pub second_moment: f64,
    pub second_moment_se: f64,
    pub energy: f64,
    pub energy_se: f64,
}

impl IsometryReport {
    pub fn combined_se(&self) -> f64 {
        self.second_moment_se.hypot(self.energy_se)
    }

    pub fn gap(&self) -> f64 {
        (self.second_moment - self.energy).abs()
    }

    pub fn within(&self, bands: f64) -> bool {
        self.gap() <= bands * self.combined_se()
    }
}

pub fn ito_isometry(f: &AdaptedSignal, w: &BrownianEnsemble) -> Result<IsometryReport> {
    f.check_grid(w.dt(), w.steps())?;
    let (sq, en): (Vec<f64>, Vec<f64>) = (0..w.paths())
        .into_par_iter()
        .map(|p| {
            let (i, e) = integral_and_energy(f, w, p);
            (i.norm_squared(), e)
        })
        .unzip();
    let (second_moment, second_moment_se) = mean_se(&sq);
    let (energy, energy_se) = mean_se(&en);
    Ok(IsometryReport { second_moment, second_moment_se, energy, energy_se })
}
