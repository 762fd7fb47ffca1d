use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::delay::{DelaySpec, SegmentState};
use crate::linalg::{c, real_matrix, CMatrix, CVector};
use crate::operators::{ControlOp, Generator, ObservationOp};
use crate::perturbation::{BoundaryEnds, BoundarySpec, PerturbationOp};
use crate::semilinear::{Nonlinearity, SemilinearSpec};
use crate::stochastic::{AdaptedSignal, InitialState, LinearSystemSpec, NoiseOp};

/// Largest seed a TOML integer can carry.
pub const MAX_SEED: u64 = i64::MAX as u64;

/// One scenario, one file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub numerics: Numerics,
    /// Absent only for boundary scenarios, whose generator comes from the stencil.
    pub generator: Option<GeneratorConfig>,
    #[serde(default)]
    pub control: OpConfig,
    #[serde(default)]
    pub observation: OpConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub input: InputConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub perturbation: Option<PerturbationConfig>,
    pub boundary: Option<BoundaryConfig>,
    pub delay: Option<DelayConfig>,
    pub semilinear: Option<SemilinearConfig>,
    #[serde(default)]
    pub checks: Vec<CheckEntry>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Linear,
    Perturbed,
    Boundary,
    Delay,
    Semilinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub dt: f64,
    pub horizon: f64,
    pub paths: usize,
    /// Worker threads; `0` or absent means all available cores.
    #[serde(default)]
    pub threads: usize,
    /// Paths written to trajectory CSVs.
    #[serde(default = "default_csv_paths")]
    pub csv_paths: usize,
    /// Approximate number of time nodes per path in trajectory CSVs.
    #[serde(default = "default_csv_nodes")]
    pub csv_nodes: usize,
}

fn default_csv_paths() -> usize {
    8
}

fn default_csv_nodes() -> usize {
    101
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorConfig {
    Diagonal { eigenvalues: Vec<f64> },
    /// Eigenvalues `-k²`, `k = 1..=modes`.
    Heat { modes: usize },
    Dense { matrix: Vec<Vec<f64>> },
    Shift { step: f64, nodes: usize },
}

/// Explicit list or `scale·k^exponent` for `k = 1..=dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeffs {
    List(Vec<f64>),
    Power { scale: f64, exponent: f64 },
}

impl Coeffs {
    pub fn values(&self, dim: usize) -> Result<Vec<f64>, HarnessError> {
        match self {
            Self::List(v) if v.len() == dim => Ok(v.clone()),
            Self::List(v) => Err(HarnessError::Schema(format!("expected {dim} coefficients, got {}", v.len()))),
            Self::Power { scale, exponent } => Ok((1..=dim).map(|k| scale * (k as f64).powf(*exponent)).collect()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OpConfig {
    #[default]
    None,
    Identity,
    Diagonal { coeffs: Coeffs },
    Lumped { coeffs: Coeffs },
    Dense { matrix: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseConfig {
    #[default]
    Zero,
    /// `ℳx = m x`.
    Scalar { value: f64 },
    Diagonal { coeffs: Coeffs },
    Additive { coeffs: Coeffs },
    Dense { matrix: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputConfig {
    #[default]
    Zero,
    Constant { values: Vec<f64> },
    /// `amplitude·sin(frequency·t)` on every channel.
    Sine { amplitude: f64, frequency: f64, channels: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    #[default]
    Zero,
    Fixed { values: Vec<f64> },
    /// `ξ_k = k^{-exponent}`.
    Power { exponent: f64 },
    Gaussian { scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PerturbationConfig {
    Dense { matrix: Vec<Vec<f64>> },
    Modal { coeffs: Coeffs },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub interior: usize,
    pub kappa: f64,
    pub ends: EndsConfig,
    /// Interior feedback `K`, `interior × interior`.
    pub feedback: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndsConfig {
    Right,
    Both,
}

/// Scalar delay system; the generator is the scenario's one-mode generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    pub r: f64,
    /// Atoms `[θ, weight]` of the state delay.
    #[serde(default)]
    pub state_atoms: Vec<[f64; 2]>,
    #[serde(default)]
    pub input_atoms: Vec<[f64; 2]>,
    /// Affine state history `a + bθ`.
    pub history: [f64; 2],
    /// Input history `a·sin(bθ)`.
    #[serde(default)]
    pub input_history: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemilinearConfig {
    /// Declared Lipschitz constant; the drift and diffusion are `(L/2)·tanh`.
    pub lipschitz: f64,
    pub tau: f64,
    #[serde(default)]
    pub sweep: Vec<f64>,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

fn default_pairs() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckEntry {
    pub name: CheckName,
    pub tolerance: Option<f64>,
    pub paths: Option<usize>,
    /// Integrands, data bundles, random instances or ladder rungs, by check.
    pub samples: Option<usize>,
    pub dt: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    ItoIsometry,
    OuVariance,
    StrongOrder,
    ConvolutionAdmissibility,
    LaxPhillips,
    PhiWStructure,
    VcfCrosscheck,
    SemigroupRoutes,
    DirichletMap,
    DelayEquivalence,
    DelayRefinement,
    DelayBound,
    ControllabilityGramian,
    DetObservability,
    SemilinearThreshold,
    WellposedConstant,
    YosidaDomain,
    ShiftExactness,
    AdmissibilityConstant,
    Reproducibility,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<CMatrix, HarnessError> {
    let n = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(HarnessError::Schema(format!("{what}: matrix rows must be nonempty and of equal length")));
    }
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(real_matrix(&refs))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs serialize")
    }

    /// Shape checks run before any computation.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let n = &self.numerics;
        if !(n.dt > 0.0) || !(n.horizon > 0.0) || n.paths == 0 {
            return Err(HarnessError::Schema("numerics need dt > 0, horizon > 0 and paths ≥ 1".into()));
        }
        if self.seed > MAX_SEED {
            return Err(HarnessError::Schema(format!("seed {} exceeds the TOML integer range (max {MAX_SEED})", self.seed)));
        }
        let steps = (n.horizon / n.dt).round();
        if (steps * n.dt - n.horizon).abs() > 1e-9 * n.horizon {
            return Err(HarnessError::Schema(format!("dt {} does not divide the horizon {}", n.dt, n.horizon)));
        }
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(HarnessError::Schema(format!("{:?} scenario needs a [{what}] table", self.kind)))
            }
        };
        match self.kind {
            ScenarioKind::Perturbed => need(self.perturbation.is_some(), "perturbation")?,
            ScenarioKind::Boundary => need(self.boundary.is_some(), "boundary")?,
            ScenarioKind::Delay => need(self.delay.is_some(), "delay")?,
            ScenarioKind::Semilinear => need(self.semilinear.is_some(), "semilinear")?,
            ScenarioKind::Linear => {}
        }
        if self.kind != ScenarioKind::Boundary {
            need(self.generator.is_some(), "generator")?;
        }
        if let Some(s) = &self.semilinear {
            if s.sweep.iter().any(|l| !(*l >= 0.0)) {
                return Err(HarnessError::Schema("sweep values must be nonnegative".into()));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.numerics.horizon / self.numerics.dt).round() as usize
    }

    pub fn generator(&self) -> Result<Generator, HarnessError> {
        let g = self.generator.as_ref().ok_or_else(|| HarnessError::Schema("missing [generator] table".into()))?;
        Ok(match g {
            GeneratorConfig::Diagonal { eigenvalues } => Generator::from_real_spectrum(eigenvalues)?,
            GeneratorConfig::Heat { modes } => Generator::heat(*modes),
            GeneratorConfig::Dense { matrix: m } => Generator::dense_auto(matrix(m, "generator")?)?,
            GeneratorConfig::Shift { step, nodes } => Generator::shift_grid(*step, *nodes)?,
        })
    }

    pub fn control(&self, dim: usize) -> Result<ControlOp, HarnessError> {
        Ok(match &self.control {
            OpConfig::None => ControlOp::zero(dim, 1),
            OpConfig::Identity => ControlOp::diagonal_real(&vec![1.0; dim]),
            OpConfig::Diagonal { coeffs } => ControlOp::diagonal_real(&coeffs.values(dim)?),
            OpConfig::Lumped { coeffs } => ControlOp::lumped_real(&coeffs.values(dim)?),
            OpConfig::Dense { matrix: m } => ControlOp::Dense(matrix(m, "control")?),
        })
    }

    pub fn observation(&self, dim: usize) -> Result<ObservationOp, HarnessError> {
        Ok(match &self.observation {
            OpConfig::None => ObservationOp::diagonal_real(&vec![0.0; dim]),
            OpConfig::Identity => ObservationOp::identity(dim),
            OpConfig::Diagonal { coeffs } => ObservationOp::diagonal_real(&coeffs.values(dim)?),
            OpConfig::Lumped { coeffs } => ObservationOp::lumped_real(&coeffs.values(dim)?),
            OpConfig::Dense { matrix: m } => ObservationOp::Dense(matrix(m, "observation")?),
        })
    }

    pub fn noise(&self, dim: usize) -> Result<NoiseOp, HarnessError> {
        Ok(match &self.noise {
            NoiseConfig::Zero => NoiseOp::zero(dim),
            NoiseConfig::Scalar { value } => NoiseOp::scalar_multiple(dim, *value),
            NoiseConfig::Diagonal { coeffs } => NoiseOp::diagonal_real(&coeffs.values(dim)?),
            NoiseConfig::Additive { coeffs } => NoiseOp::additive_real(&coeffs.values(dim)?),
            NoiseConfig::Dense { matrix: m } => NoiseOp::Dense(matrix(m, "noise")?),
        })
    }

    /// Magnitude of a scalar-type noise, for systems that take one number.
    pub fn noise_level(&self) -> Result<f64, HarnessError> {
        match &self.noise {
            NoiseConfig::Zero => Ok(0.0),
            NoiseConfig::Scalar { value } => Ok(*value),
            NoiseConfig::Diagonal { coeffs } | NoiseConfig::Additive { coeffs } => Ok(coeffs.values(1)?[0]),
            NoiseConfig::Dense { .. } => Err(HarnessError::Schema("expected a scalar noise level".into())),
        }
    }

    pub fn linear_spec(&self) -> Result<LinearSystemSpec, HarnessError> {
        let gen = self.generator()?;
        let k = gen.dim();
        Ok(LinearSystemSpec::new(gen, self.control(k)?, self.observation(k)?, self.noise(k)?)?)
    }

    pub fn initial(&self, dim: usize) -> Result<InitialState, HarnessError> {
        Ok(match &self.initial {
            InitialConfig::Zero => InitialState::Zero,
            InitialConfig::Fixed { values } if values.len() == dim => InitialState::real(values),
            InitialConfig::Fixed { values } => {
                return Err(HarnessError::Schema(format!("initial state has {} entries, expected {dim}", values.len())))
            }
            InitialConfig::Power { exponent } => {
                InitialState::Fixed(CVector::from_fn(dim, |k, _| c(((k + 1) as f64).powf(-exponent))))
            }
            InitialConfig::Gaussian { scale } => InitialState::gaussian(self.seed, self.numerics.paths, dim, *scale),
        })
    }

    pub fn input(&self, channels: usize) -> Result<AdaptedSignal, HarnessError> {
        let s = match &self.input {
            InputConfig::Zero => AdaptedSignal::zero(channels),
            InputConfig::Constant { values } => AdaptedSignal::constant(values),
            &InputConfig::Sine { amplitude, frequency, channels: m } => AdaptedSignal::of_time(m, move |t, out| {
                out.fill(c(amplitude * (frequency * t).sin()));
            }),
        };
        if s.dim() != channels {
            return Err(HarnessError::Schema(format!("input has {} channels, expected {channels}", s.dim())));
        }
        Ok(s)
    }

    pub fn perturbation(&self, gen: &Generator) -> Result<PerturbationOp, HarnessError> {
        let horizon = self.numerics.horizon;
        match &self.perturbation {
            Some(PerturbationConfig::Dense { matrix: m }) => Ok(PerturbationOp::dense(matrix(m, "perturbation")?, gen, horizon)?),
            Some(PerturbationConfig::Modal { coeffs }) => Ok(PerturbationOp::modal_real(&coeffs.values(gen.dim())?, gen, horizon)?),
            None => Err(HarnessError::Schema("missing [perturbation] table".into())),
        }
    }

    pub fn boundary_spec(&self) -> Result<(BoundarySpec, CMatrix), HarnessError> {
        let b = self.boundary.as_ref().ok_or_else(|| HarnessError::Schema("missing [boundary] table".into()))?;
        let ends = match b.ends {
            EndsConfig::Right => BoundaryEnds::Right,
            EndsConfig::Both => BoundaryEnds::Both,
        };
        let spec = BoundarySpec::heat(b.interior, b.kappa, ends)?;
        let k = match &b.feedback {
            Some(m) => matrix(m, "feedback")?,
            None => CMatrix::zeros(b.interior, b.interior),
        };
        Ok((spec, k))
    }

    /// Delay system with its histories on the grid of step `h`.
    pub fn delay_spec(&self, h: f64) -> Result<(DelaySpec, SegmentState, SegmentState), HarnessError> {
        let d = self.delay.as_ref().ok_or_else(|| HarnessError::Schema("missing [delay] table".into()))?;
        let lambda = match &self.generator {
            Some(GeneratorConfig::Diagonal { eigenvalues }) if eigenvalues.len() == 1 => eigenvalues[0],
            _ => return Err(HarnessError::Schema("delay scenarios need a one-mode diagonal generator".into())),
        };
        let atoms = |v: &[[f64; 2]]| v.iter().map(|a| (a[0], a[1])).collect::<Vec<_>>();
        let spec = DelaySpec::scalar(lambda, &atoms(&d.state_atoms), &atoms(&d.input_atoms), d.r, self.noise_level()?, h)?;
        let [a, b] = d.history;
        let phi = SegmentState::from_fn(d.r, h, 1, |t| vec![a + b * t])?;
        let [p, q] = d.input_history;
        let psi = SegmentState::from_fn(d.r, h, 1, |t| vec![p * (q * t).sin()])?;
        Ok((spec, phi, psi))
    }

    pub fn semilinear_family(&self) -> Result<impl Fn(f64) -> crate::Result<SemilinearSpec> + '_, HarnessError> {
        let gen = self.generator()?;
        let obs = self.observation(gen.dim())?;
        Ok(move |l: f64| SemilinearSpec::tanh_pair(gen.clone(), obs.clone(), l))
    }

    pub fn semilinear(&self) -> Result<(SemilinearSpec, &SemilinearConfig), HarnessError> {
        let s = self.semilinear.as_ref().ok_or_else(|| HarnessError::Schema("missing [semilinear] table".into()))?;
        Ok((self.semilinear_family()?(s.lipschitz)?, s))
    }

    /// Nonlinearities of the scenario family at its declared `L`.
    pub fn nonlinearities(&self) -> Option<(Nonlinearity, Nonlinearity)> {
        self.semilinear.as_ref().map(|s| {
            let g = Nonlinearity::Tanh { scale: 0.5 * s.lipschitz };
            (g.clone(), g)
        })
    }
}
