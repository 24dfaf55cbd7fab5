use rayon::prelude::*;

use crate::model::{BinTypeTable, Instance, Item, PackingSolution};
use crate::perm::{factorial, next_permutation};

use super::config::{build_initial_config, sublist_contents};
use super::pack::{pack_thread, Emission, PackPolicy, RuleChoice, ThreadContext, ThreadResult};
use super::plan::{plan_execution, ExecutionPlan, Heuristic};
use super::rng::{RngStream, StreamPath};
use super::{on_workers, HeuristicError, SolveOptions};

/// All orderings of `subset` in lexicographic order of positions; the
/// identity comes first. Permutation `p` runs on lane `p` of its block.
pub fn permutations<T: Clone>(subset: &[T], max_lanes: usize) -> Result<Vec<Vec<T>>, HeuristicError> {
    let size = subset.len();
    let count = factorial(size).unwrap_or(u64::MAX);
    if count > max_lanes as u64 {
        return Err(HeuristicError::SubsetTooLarge { size, permutations: count, limit: max_lanes });
    }
    let mut order: Vec<usize> = (0..size).collect();
    let mut out = Vec::with_capacity(count as usize);
    loop {
        out.push(order.iter().map(|&i| subset[i].clone()).collect());
        if !next_permutation(&mut order) {
            break;
        }
    }
    Ok(out)
}

/// Packs items strictly in the given order; criterion tags and rule choice
/// stay random.
pub fn thread_pack_h2(
    permutation: &[Item],
    bin_types: &BinTypeTable,
    options: &SolveOptions,
    ctx: ThreadContext,
    rng: &mut RngStream,
) -> ThreadResult {
    let policy = PackPolicy { emission: Emission::InOrder, criteria: options.criteria(), choice: RuleChoice::Random };
    pack_thread(permutation, bin_types, &policy, ctx, Some(rng))
}

/// Minimum capacity and the lane that reached it; ties go to the lowest lane.
pub fn block_reduce(results: &[ThreadResult]) -> Option<(u64, usize)> {
    results.iter().map(|r| (r.capacity_used, r.lane)).min()
}

#[derive(Clone, Debug)]
pub struct BlockOutcome {
    pub block: usize,
    pub kernel: usize,
    pub lanes: usize,
    pub winner: ThreadResult,
    /// Trace of every lane, in lane order; empty unless tracing.
    pub trace: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct H2Run {
    pub plan: ExecutionPlan,
    pub solution: PackingSolution,
    pub blocks: Vec<BlockOutcome>,
}

impl H2Run {
    pub fn trace(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().flat_map(|b| b.trace.iter().map(String::as_str))
    }

    pub fn permutations_evaluated(&self) -> usize {
        self.blocks.iter().map(|b| b.lanes).sum()
    }
}

pub fn run_h2(instance: &Instance, options: &SolveOptions) -> PackingSolution {
    run_h2_detailed(instance, options).solution
}

pub fn run_h2_detailed(instance: &Instance, options: &SolveOptions) -> H2Run {
    let plan = plan_execution(instance.len(), Heuristic::H2, &options.plan_config(Heuristic::H2));
    let skin = build_initial_config(instance, &plan, &mut RngStream::for_host(options.seed));
    let subsets = sublist_contents(&skin);
    let bin_types = instance.bin_types();
    let max_lanes = factorial(plan.subset_size).unwrap_or(u64::MAX) as usize;

    let run_block = |block: usize| -> Option<BlockOutcome> {
        let subset = &subsets[block];
        if subset.is_empty() {
            return None;
        }
        let kernel = plan.kernel_of(block);
        let orders = permutations(subset, max_lanes).expect("plan keeps s! within the block");
        let results: Vec<ThreadResult> = orders
            .par_iter()
            .enumerate()
            .map(|(lane, order)| {
                let path = StreamPath::new(kernel, block, lane);
                let ctx = ThreadContext { path, owner: block, trace: options.trace };
                thread_pack_h2(order, bin_types, options, ctx, &mut RngStream::for_thread(options.seed, path))
            })
            .collect();
        let (_, lane) = block_reduce(&results)?;
        let trace = results.iter().flat_map(|r| r.trace.iter().cloned()).collect();
        let lanes = results.len();
        let winner = results.into_iter().nth(lane)?;
        Some(BlockOutcome { block, kernel, lanes, winner, trace })
    };

    let blocks: Vec<BlockOutcome> = on_workers(options.workers, || {
        // Kernels run one after another, each over at most `blocks_per_kernel` blocks.
        (0..plan.kernels)
            .flat_map(|kernel| {
                let start = kernel * plan.blocks_per_kernel;
                let end = (start + plan.blocks_per_kernel).min(subsets.len());
                (start..end).into_par_iter().filter_map(run_block).collect::<Vec<_>>()
            })
            .collect()
    });

    let solution = PackingSolution::from_bins(instance, blocks.iter().flat_map(|b| b.winner.used_bins().cloned()));
    H2Run { plan, solution, blocks }
}
