use rayon::prelude::*;

use crate::model::{BinTypeTable, Instance, Item, PackingSolution};

use super::config::{build_initial_config, sublist_contents};
use super::pack::{pack_thread, Emission, PackPolicy, RuleChoice, ThreadContext, ThreadResult};
use super::plan::{plan_execution, ExecutionPlan, Heuristic};
use super::rng::{RngStream, StreamPath};
use super::{on_workers, SolveOptions};

/// Packs one random sublist: rules 3 to 6 chosen uniformly at random,
/// items released in any order.
pub fn thread_pack_h1(
    subset: &[Item],
    bin_types: &BinTypeTable,
    options: &SolveOptions,
    ctx: ThreadContext,
    rng: &mut RngStream,
) -> ThreadResult {
    let policy = PackPolicy { emission: Emission::Free, criteria: options.criteria(), choice: RuleChoice::Random };
    pack_thread(subset, bin_types, &policy, ctx, Some(rng))
}

#[derive(Clone, Debug)]
pub struct H1Run {
    pub plan: ExecutionPlan,
    pub solution: PackingSolution,
    /// One result per non-empty sublist, in subset-index order.
    pub threads: Vec<ThreadResult>,
}

impl H1Run {
    pub fn trace(&self) -> impl Iterator<Item = &str> {
        self.threads.iter().flat_map(|t| t.trace.iter().map(String::as_str))
    }
}

pub fn run_h1(instance: &Instance, options: &SolveOptions) -> PackingSolution {
    run_h1_detailed(instance, options).solution
}

pub fn run_h1_detailed(instance: &Instance, options: &SolveOptions) -> H1Run {
    let plan = plan_execution(instance.len(), Heuristic::H1, &options.plan_config(Heuristic::H1));
    let skin = build_initial_config(instance, &plan, &mut RngStream::for_host(options.seed));
    let subsets = sublist_contents(&skin);
    let bin_types = instance.bin_types();

    let threads: Vec<ThreadResult> = on_workers(options.workers, || {
        subsets
            .par_iter()
            .enumerate()
            .filter(|(_, subset)| !subset.is_empty())
            .map(|(index, subset)| {
                let block = index / plan.threads_per_block;
                let lane = index % plan.threads_per_block;
                let path = StreamPath::new(plan.kernel_of(block), block, lane);
                let ctx = ThreadContext { path, owner: index, trace: options.trace };
                let mut rng = RngStream::for_thread(options.seed, path);
                thread_pack_h1(subset, bin_types, options, ctx, &mut rng)
            })
            .collect()
    });

    let solution = PackingSolution::from_bins(instance, threads.iter().flat_map(|t| t.used_bins().cloned()));
    H1Run { plan, solution, threads }
}
