//! Desk-scale laboratory for stochastic well-posed linear systems.
//!
//! The crate realizes `dX = (AX + Bu)dt + ℳX dW`, `Y = CX` with possibly
//! unbounded `B` and `C` by spectral truncation, and checks the structural
//! identities of such systems numerically: admissibility, Yosida extensions,
//! mild solutions, perturbed semigroups, boundary and delay systems, and
//! exact observability of semilinear systems.

pub mod delay;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod operators;
pub mod perturbation;
pub mod semilinear;
pub mod stochastic;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
