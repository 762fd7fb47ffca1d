//! Linear stochastic systems with distributed delays in the state, the input
//! and the output. Delay measures are finite sums of atoms. Two solvers share
//! one grid: the method of steps on stored segments, and the free-delay
//! reformulation on the product of the state with both segment spaces.

mod bound;
mod direct;
mod measure;
mod product;

pub use bound::{delay_output_norm, delay_wellposed_bound, DelayBound, DelayData};
pub use direct::{solve_delay_direct, DelayRun, DelaySpec};
pub use measure::{cells, stieltjes_apply, DelayMeasure, SegmentState};
pub use product::{assemble_delay_product, delay_crosscheck, solve_delay_product, DelayProduct};
