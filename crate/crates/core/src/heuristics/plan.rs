use serde::{Deserialize, Serialize};

use crate::perm::factorial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heuristic {
    /// Random sublists of ten items, one virtual thread per sublist.
    H1,
    /// Blocks of five items, one virtual thread per permutation of the block.
    H2,
}

impl std::fmt::Display for Heuristic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Heuristic::H1 => "h1",
            Heuristic::H2 => "h2",
        })
    }
}

/// Grid limits and subset size used to lay out a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub subset_size: usize,
    pub max_threads_per_block: usize,
    /// `None` runs all blocks in a single kernel.
    pub max_blocks_per_kernel: Option<usize>,
}

impl PlanConfig {
    pub fn default_for(heuristic: Heuristic) -> Self {
        match heuristic {
            Heuristic::H1 => Self { subset_size: 10, max_threads_per_block: 1000, max_blocks_per_kernel: None },
            Heuristic::H2 => Self { subset_size: 5, max_threads_per_block: 120, max_blocks_per_kernel: Some(32) },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub heuristic: Heuristic,
    pub kernels: usize,
    /// Blocks over the whole grid.
    pub blocks: usize,
    pub blocks_per_kernel: usize,
    pub threads_per_block: usize,
    /// Items per thread (H1) or per block (H2).
    pub items_per_unit: usize,
    /// Capacity of each sublist membrane.
    pub subset_size: usize,
    /// Number of sublist membranes.
    pub sublists: usize,
}

impl ExecutionPlan {
    /// Block-major index of thread `lane` in block `block`.
    pub fn subset_index(&self, block: usize, lane: usize) -> usize {
        block * self.threads_per_block + lane
    }

    pub fn kernel_of(&self, block: usize) -> usize {
        block / self.blocks_per_kernel
    }
}

pub fn plan_execution(m: usize, heuristic: Heuristic, config: &PlanConfig) -> ExecutionPlan {
    let m = m.max(1);
    let max_threads = config.max_threads_per_block.max(1);
    match heuristic {
        Heuristic::H1 => {
            let s = config.subset_size.max(1);
            let threads = m.div_ceil(s);
            let blocks = threads.div_ceil(max_threads);
            let threads_per_block = threads.div_ceil(blocks);
            let (kernels, blocks_per_kernel) = batches(blocks, config.max_blocks_per_kernel);
            ExecutionPlan {
                heuristic,
                kernels,
                blocks,
                blocks_per_kernel,
                threads_per_block,
                items_per_unit: s,
                subset_size: s,
                sublists: blocks * threads_per_block,
            }
        }
        Heuristic::H2 => {
            // largest subset size whose permutations fit in one block
            let mut s = config.subset_size.max(1);
            while s > 1 && factorial(s).is_none_or(|f| f > max_threads as u64) {
                s -= 1;
            }
            let per_block = s.min(m);
            let blocks = m.div_ceil(s);
            let (kernels, blocks_per_kernel) = batches(blocks, config.max_blocks_per_kernel);
            ExecutionPlan {
                heuristic,
                kernels,
                blocks,
                blocks_per_kernel,
                threads_per_block: factorial(per_block).unwrap_or(1) as usize,
                items_per_unit: per_block,
                subset_size: s,
                sublists: blocks,
            }
        }
    }
}

fn batches(blocks: usize, limit: Option<usize>) -> (usize, usize) {
    match limit {
        Some(limit) if limit > 0 => (blocks.div_ceil(limit), blocks.min(limit)),
        _ => (1, blocks),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(m: usize, h: Heuristic) -> ExecutionPlan {
        plan_execution(m, h, &PlanConfig::default_for(h))
    }

    #[test]
    fn first_heuristic_rows() {
        let p = plan(1000, Heuristic::H1);
        assert_eq!((p.kernels, p.blocks, p.threads_per_block, p.items_per_unit), (1, 1, 100, 10));
        let p = plan(100_000, Heuristic::H1);
        assert_eq!((p.kernels, p.blocks, p.threads_per_block, p.items_per_unit), (1, 10, 1000, 10));
        assert_eq!(p.sublists * p.subset_size, 100_000);
    }

    #[test]
    fn second_heuristic_rows() {
        let p = plan(10_000, Heuristic::H2);
        assert_eq!((p.kernels, p.blocks, p.threads_per_block, p.items_per_unit), (63, 2000, 120, 5));
        let p = plan(3, Heuristic::H2);
        assert_eq!((p.kernels, p.blocks, p.threads_per_block, p.items_per_unit), (1, 1, 6, 3));
        let p = plan(200, Heuristic::H2);
        assert_eq!((p.blocks, p.kernels), (40, 2));
    }

    #[test]
    fn uneven_sizes_cover_all_items() {
        for m in [1, 7, 99, 1001, 12_345, 150_001] {
            let p = plan(m, Heuristic::H1);
            assert!(p.sublists * p.subset_size >= m);
            assert!(p.threads_per_block <= 1000);
            let p = plan(m, Heuristic::H2);
            assert!(p.sublists * p.subset_size >= m);
            assert!(p.blocks_per_kernel <= 32);
        }
    }

    #[test]
    fn oversized_subset_shrinks_to_block_limit() {
        let cfg = PlanConfig { subset_size: 7, ..PlanConfig::default_for(Heuristic::H2) };
        let p = plan_execution(100, Heuristic::H2, &cfg);
        assert_eq!((p.subset_size, p.threads_per_block), (5, 120));
    }

    #[test]
    fn h1_batching_is_configurable() {
        let cfg = PlanConfig { max_blocks_per_kernel: Some(4), ..PlanConfig::default_for(Heuristic::H1) };
        let p = plan_execution(100_000, Heuristic::H1, &cfg);
        assert_eq!((p.kernels, p.blocks_per_kernel), (3, 4));
    }
}
