//! Brownian ensembles, Itô integrals, stochastic convolutions and the mild
//! solution of the linear input system `dX = (AX + Bu)dt + ℳX dW`.
//!
//! Every per-path computation depends only on its own Brownian stream, and all
//! cross-path reductions use a fixed pairwise order, so results do not depend
//! on thread scheduling.

mod adapted;
mod brownian;
mod controllability;
mod ensemble;
mod ito;
mod lax;
mod noise;
mod sde;
pub mod stats;

pub use adapted::{AdaptedSignal, Past};
pub use brownian::{path_increments, BrownianEnsemble};
pub use controllability::{exact_controllability_test, ControllabilityReport};
pub use ensemble::{Provenance, TrajectoryEnsemble};
pub use ito::{ito_integral, ito_isometry, IsometryReport};
pub use lax::{lax_crosscheck, lax_phillips_assemble, LaxPhillips};
pub use noise::NoiseOp;
pub(crate) use sde::Stepper;
pub use sde::{
    convolution_yosida_bound_check, phi_w, phi_w_fixed_point_residual, solve_linear_sde, solve_linear_sde_strided,
    stochastic_convolution, strong_order_linear_noise, ConvolutionBound, InitialState, LinearSystemSpec,
    StrongOrderStudy,
};
