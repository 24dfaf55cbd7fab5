//! Variable sized bin packing with hybrid P-system heuristics.
//!
//! Items are packed into bins drawn from several capacity types, minimizing
//! the total capacity of the bins used. The two heuristics in
//! [`heuristics`] run an active-membrane rule system ([`membrane`]) on a
//! simulated kernel/block/thread grid; [`baselines`] holds the exhaustive and
//! classic comparison solvers.

pub mod baselines;
pub mod bench;
pub mod heuristics;
pub mod instances;
pub mod membrane;
pub mod model;
pub mod perm;
pub mod solve;

pub use heuristics::{run_h1, run_h2, Heuristic, SolveOptions};
pub use model::{lower_bound, utilization, verify_solution, Criterion, Instance, PackingSolution};
pub use solve::{solve, SolutionDoc, Solver};
