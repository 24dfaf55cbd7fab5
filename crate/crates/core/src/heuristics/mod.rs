//! The two hybrid P-system heuristics executed on a virtual grid of
//! kernels, blocks and threads.
//!
//! Virtual threads are independent tasks: each owns its membrane region and
//! its random stream, keyed by grid position. Results are collected in grid
//! order, so any worker count yields the same solution.

mod config;
mod h1;
mod h2;
mod pack;
mod plan;
mod rng;

pub use config::{build_initial_config, distribution_rule, sublist_contents};
pub use h1::{run_h1, run_h1_detailed, thread_pack_h1, H1Run};
pub use h2::{block_reduce, permutations, run_h2, run_h2_detailed, thread_pack_h2, BlockOutcome, H2Run};
pub use pack::{
    own_bins, pack_thread, select_slot, select_target_bin, thread_rules, Emission, PackPolicy, RuleChoice,
    ThreadContext, ThreadResult, ThreadStats, RULE_DIVIDE, RULE_DONE, RULE_EMIT, RULE_PACK,
};
pub use plan::{plan_execution, ExecutionPlan, Heuristic, PlanConfig};
pub use rng::{RngStream, StreamPath};

pub use crate::model::Criterion as SelectionCriterion;

use thiserror::Error;

use crate::membrane::CriterionSet;
use crate::model::Criterion;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "MEMBRANE_PACK_WORKERS";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeuristicError {
    #[error("subset of {size} items has {permutations} permutations, more than {limit} threads per block")]
    SubsetTooLarge { size: usize, permutations: u64, limit: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub seed: u64,
    /// Forces every emitted item to carry this criterion.
    pub criterion: Option<Criterion>,
    /// `None` uses the default worker count.
    pub workers: Option<usize>,
    pub trace: bool,
    /// `None` uses the heuristic's default layout.
    pub plan: Option<PlanConfig>,
}

impl SolveOptions {
    pub fn seeded(seed: u64) -> Self {
        Self { seed, criterion: None, workers: None, trace: false, plan: None }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self { workers: Some(workers), ..self }
    }

    pub fn with_criterion(self, criterion: Criterion) -> Self {
        Self { criterion: Some(criterion), ..self }
    }

    pub(crate) fn criteria(&self) -> CriterionSet {
        self.criterion.map_or(CriterionSet::ALL, CriterionSet::only)
    }

    pub(crate) fn plan_config(&self, heuristic: Heuristic) -> PlanConfig {
        self.plan.unwrap_or_else(|| PlanConfig::default_for(heuristic))
    }
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` on a pool with the requested number of workers.
pub fn on_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers.or_else(workers_from_env) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
