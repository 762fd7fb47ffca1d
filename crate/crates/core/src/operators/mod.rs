//! Generators, semigroups, resolvents, admissibility, Yosida extensions,
//! transfer functions and the deterministic input/output maps.
//!
//! Infinite-dimensional operators are realized by spectral truncation: an
//! unbounded control or observation operator is a coefficient profile in the
//! mode index, and every operation that sums over modes runs a dyadic tail
//! test instead of silently truncating.

mod admissibility;
mod generator;
mod io;
mod ops;
mod signal;
mod transfer;
mod yosida;

pub use admissibility::{
    controllability_gramian, ctrl_admissibility_check, obs_admissibility_constant, observability_gramian,
    CtrlAdmissibility,
};
pub use generator::{Generator, Propagator, Repr, StateVector};
pub use io::{extrapolated_convolution, input_trajectory, io_map, output_map};
pub use ops::{series_tail_violation, ControlOp, Coupling, ObservationOp, TailBlocks, TAIL_RATIO, TAIL_SHARE};
pub use signal::{steps_for, GridSignal};
pub use transfer::{regularity_check, suggested_truncation, transfer_function, transfer_with_tail, Regularity, RegularityReport};
pub use yosida::{yosida_apply, yosida_limit, DomainVerdict, Rung, YosidaLadder, YosidaLimit};
