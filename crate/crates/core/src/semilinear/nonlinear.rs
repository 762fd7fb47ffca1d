use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};

/// State-to-state maps acting coordinatewise on real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    Zero,
    /// `x ↦ a x`.
    Linear { scale: f64 },
    /// `x ↦ a tanh(x)`.
    Tanh { scale: f64 },
    /// `x ↦ a clamp(x, -R, R)²`; without a radius the map is not globally Lipschitz.
    Square { scale: f64, radius: Option<f64> },
}

impl Nonlinearity {
    fn scalar(&self, x: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Linear { scale } => scale * x,
            Self::Tanh { scale } => scale * x.tanh(),
            Self::Square { scale, radius } => {
                let y = radius.map_or(x, |r| x.clamp(-r, r));
                scale * y * y
            }
        }
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        match self {
            Self::Zero => CVector::zeros(x.len()),
            _ => x.map(|z| C64::new(self.scalar(z.re), self.scalar(z.im))),
        }
    }

    /// Best constant `L` with `‖N(x) - N(y)‖ ≤ L ‖x - y‖`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Linear { scale } | Self::Tanh { scale } => scale.abs(),
            Self::Square { scale, radius } => radius.map_or(f64::INFINITY, |r| 2.0 * scale.abs() * r),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Self::Zero => true,
            Self::Linear { scale } | Self::Tanh { scale } | Self::Square { scale, .. } => scale == 0.0,
        }
    }
}

/// Sampled Lipschitz and growth test with its worst pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzReport {
    pub samples: usize,
    pub max_ratio: f64,
    pub witness: (CVector, CVector),
    /// Largest `(‖G(x)‖² + ‖F(x)‖²) / (1 + ‖x‖²)`.
    pub max_growth: f64,
    pub passed: bool,
}

impl LipschitzReport {
    pub fn into_result(self, declared: f64) -> Result<Self> {
        if self.passed {
            Ok(self)
        } else {
            Err(Error::LipschitzViolation { ratio: self.max_ratio, declared })
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> CVector {
    CVector::from_fn(dim, |_, _| {
        let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        C64::new(scale * a, scale * b)
    })
}

/// Samples pairs at magnitudes spread log-uniformly over `[1e-2, 1e3]` with
/// separations down to a thousandth of the magnitude.
pub fn lipschitz_validate(
    g: &Nonlinearity,
    f: &Nonlinearity,
    lipschitz: f64,
    growth: f64,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    if samples < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 sample pairs, got {samples}")));
    }
    if !(lipschitz >= 0.0) || !(growth >= 0.0) || dim == 0 {
        return Err(Error::InvalidParameter("Lipschitz and growth constants must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = LipschitzReport {
        samples,
        max_ratio: 0.0,
        witness: (CVector::zeros(dim), CVector::zeros(dim)),
        max_growth: 0.0,
        passed: true,
    };
    for _ in 0..samples {
        let scale = 10f64.powf(rng.gen_range(-2.0..3.0));
        let sep = scale * 10f64.powf(rng.gen_range(-3.0..0.0));
        let x = gaussian(&mut rng, dim, scale);
        let y = &x + gaussian(&mut rng, dim, sep);
        let d = (&x - &y).norm();
        if d == 0.0 {
            continue;
        }
        let num = (g.apply(&x) - g.apply(&y)).norm() + (f.apply(&x) - f.apply(&y)).norm();
        let ratio = num / d;
        if ratio > out.max_ratio {
            out.max_ratio = ratio;
            out.witness = (x.clone(), y);
        }
        let grow = (g.apply(&x).norm_squared() + f.apply(&x).norm_squared()) / (1.0 + x.norm_squared());
        out.max_growth = out.max_growth.max(grow);
    }
    out.passed = out.max_ratio <= lipschitz * (1.0 + 1e-12) && out.max_growth <= growth * (1.0 + 1e-12);
    Ok(out)
}
