//! Perturbed semigroups `𝒯` generated by `A + 𝒫` with `𝒫` an admissible
//! observation-type operator, the two routes to the perturbed stochastic mild
//! solution, the smoothing study, and 1-D boundary control systems.

mod boundary;
mod op;
mod semigroup;
mod solvers;

pub use boundary::{dirichlet_map, solve_boundary_sde, BoundaryEnds, BoundaryRun, BoundarySpec, DirichletMap};
pub use op::{PerturbationKind, PerturbationOp};
pub use semigroup::{compare_routes, perturbed_generator, perturbed_semigroup, RouteComparison, SemigroupRoute};
pub use solvers::{solve_perturbed_sde, solve_perturbed_vcf, vcf_crosscheck, yosida_chain_study, ChainReport};
