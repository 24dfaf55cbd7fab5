//! Comparison solvers: exhaustive permutation search (serial and grid
//! parallel), single-pass FF/BF/WF, and a set-partition optimum used as an
//! independent oracle. Nothing in this module is random.

use rayon::prelude::*;
use thiserror::Error;

use crate::heuristics::{pack_thread, select_target_bin, PackPolicy, ThreadContext, ThreadResult};
use crate::membrane::CriterionSet;
use crate::model::{Bin, Criterion, Instance, Item, PackingSolution};
use crate::perm::{factorial, next_permutation, unrank};

/// Largest instance permutation search accepts without `force`.
pub const PERMUTATION_LIMIT: usize = 10;
/// Largest instance the partition oracle enumerates.
pub const PARTITION_LIMIT: usize = 8;
/// Permutations handled by one block of the parallel search.
pub const LANES_PER_BLOCK: u64 = 120;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BaselineError {
    #[error("{m} items exceed the limit of {limit} for this solver")]
    TooLarge { m: usize, limit: usize },
    #[error("no criterion selected")]
    NoCriteria,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermSearchResult {
    pub solution: PackingSolution,
    /// Item ids in packing order.
    pub permutation: Vec<usize>,
    /// Lexicographic rank of `permutation`.
    pub permutation_index: u64,
    pub criterion: Criterion,
    pub permutations_evaluated: u64,
}

/// Packs the items in `order` with a fixed criterion and no randomness.
pub fn pack_in_order(instance: &Instance, order: &[usize], criterion: Criterion) -> ThreadResult {
    let items: Vec<Item> = order.iter().map(|&i| instance.items()[i]).collect();
    pack_thread(&items, instance.bin_types(), &PackPolicy::deterministic(criterion), ThreadContext::detached(), None)
}

fn check_size(instance: &Instance, force: bool) -> Result<u64, BaselineError> {
    let m = instance.len();
    if m > PERMUTATION_LIMIT && !force {
        return Err(BaselineError::TooLarge { m, limit: PERMUTATION_LIMIT });
    }
    factorial(m).ok_or(BaselineError::TooLarge { m, limit: 20 })
}

fn finish(instance: &Instance, best: (u64, Criterion, u64), evaluated: u64) -> PermSearchResult {
    let (_, criterion, index) = best;
    let permutation = unrank(instance.len(), index);
    let packed = pack_in_order(instance, &permutation, criterion);
    PermSearchResult {
        solution: PackingSolution::from_bins(instance, packed.bins),
        permutation,
        permutation_index: index,
        criterion,
        permutations_evaluated: evaluated,
    }
}

/// Evaluates every permutation under every criterion, one after another.
pub fn exact_serial(
    instance: &Instance,
    criteria: CriterionSet,
    force: bool,
) -> Result<PermSearchResult, BaselineError> {
    let total = check_size(instance, force)?;
    if criteria.is_empty() {
        return Err(BaselineError::NoCriteria);
    }
    let mut best: Option<(u64, Criterion, u64)> = None;
    let mut evaluated = 0;
    for criterion in criteria.iter() {
        let mut order: Vec<usize> = (0..instance.len()).collect();
        let mut index = 0u64;
        loop {
            let capacity = pack_in_order(instance, &order, criterion).capacity_used;
            evaluated += 1;
            if best.is_none_or(|(b, _, _)| capacity < b) {
                best = Some((capacity, criterion, index));
            }
            index += 1;
            if !next_permutation(&mut order) {
                break;
            }
        }
        debug_assert_eq!(index, total);
    }
    Ok(finish(instance, best.expect("at least one permutation"), evaluated))
}

/// Same search distributed over blocks of [`LANES_PER_BLOCK`] permutations,
/// with a min-reduction per block and then over the grid.
pub fn allperm_parallel(
    instance: &Instance,
    criteria: CriterionSet,
    force: bool,
) -> Result<PermSearchResult, BaselineError> {
    let total = check_size(instance, force)?;
    if criteria.is_empty() {
        return Err(BaselineError::NoCriteria);
    }
    let m = instance.len();
    let blocks = total.div_ceil(LANES_PER_BLOCK);

    let grid_min = |criterion: Criterion| -> (u64, Criterion, u64) {
        (0..blocks)
            .into_par_iter()
            .map(|block| {
                let start = block * LANES_PER_BLOCK;
                let end = (start + LANES_PER_BLOCK).min(total);
                let mut order = unrank(m, start);
                let mut block_min = (u64::MAX, criterion, start);
                for index in start..end {
                    let capacity = pack_in_order(instance, &order, criterion).capacity_used;
                    block_min = block_min.min((capacity, criterion, index));
                    next_permutation(&mut order);
                }
                block_min
            })
            .min()
            .expect("at least one block")
    };

    let best = criteria.iter().map(grid_min).min().expect("criteria non-empty");
    Ok(finish(instance, best, total * criteria.len() as u64))
}

/// Single pass in input order; opens the smallest fitting bin type when no
/// open bin has room.
pub fn classic_online(instance: &Instance, criterion: Criterion) -> PackingSolution {
    let table = instance.bin_types();
    let mut bins: Vec<Bin> = Vec::new();
    for &item in instance.items() {
        let target = match select_target_bin(item.weight, criterion, &bins) {
            Some(i) => i,
            None => {
                let t = table.smallest_fitting(item.weight).expect("validated instance");
                bins.push(Bin::empty(t, table.capacity(t)));
                bins.len() - 1
            }
        };
        bins[target].push(item);
    }
    PackingSolution::from_bins(instance, bins)
}

/// True optimum by enumerating every set partition of the items and giving
/// each group the cheapest bin type that holds it.
pub fn partition_optimum(instance: &Instance) -> Result<u64, BaselineError> {
    let m = instance.len();
    if m > PARTITION_LIMIT {
        return Err(BaselineError::TooLarge { m, limit: PARTITION_LIMIT });
    }
    let weights: Vec<u64> = instance.weights().collect();
    let table = instance.bin_types();
    let mut groups: Vec<u64> = Vec::with_capacity(m);
    let mut best = u64::MAX;
    enumerate_partitions(&weights, table.largest(), &mut groups, &mut |groups| {
        let cost: u64 = groups
            .iter()
            .map(|&g| table.capacity(table.smallest_fitting(g).expect("group fits the largest type")))
            .sum();
        best = best.min(cost);
    });
    Ok(best)
}

/// Restricted-growth enumeration: item `i` joins an existing group or opens
/// the next one. Groups heavier than `max_group` are skipped.
fn enumerate_partitions(weights: &[u64], max_group: u64, groups: &mut Vec<u64>, visit: &mut impl FnMut(&[u64])) {
    let Some((&w, rest)) = weights.split_first() else {
        visit(groups);
        return;
    };
    for g in 0..groups.len() {
        if groups[g] + w <= max_group {
            groups[g] += w;
            enumerate_partitions(rest, max_group, groups, visit);
            groups[g] -= w;
        }
    }
    groups.push(w);
    enumerate_partitions(rest, max_group, groups, visit);
    groups.pop();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::verify_solution;

    fn inst(weights: &[u64], caps: &[u64]) -> Instance {
        Instance::new(weights.to_vec(), caps.to_vec()).unwrap()
    }

    #[test]
    fn partition_count_is_bell_number() {
        let mut count = 0;
        enumerate_partitions(&[1; 8], u64::MAX, &mut Vec::new(), &mut |_| count += 1);
        assert_eq!(count, 4140);
        let mut count = 0;
        enumerate_partitions(&[1; 3], u64::MAX, &mut Vec::new(), &mut |_| count += 1);
        assert_eq!(count, 5);
    }

    #[test]
    fn hand_derived_optima() {
        assert_eq!(partition_optimum(&inst(&[3, 3, 4], &[10, 5])), Ok(10));
        assert_eq!(partition_optimum(&inst(&[6, 6, 6], &[10, 7])), Ok(21));
        assert_eq!(partition_optimum(&inst(&[5, 5], &[10, 6])), Ok(10));
        assert!(matches!(partition_optimum(&inst(&[1; 9], &[10])), Err(BaselineError::TooLarge { m: 9, .. })));
    }

    #[test]
    fn exact_search_small_cases() {
        let r = exact_serial(&inst(&[3, 3, 4], &[10, 5]), CriterionSet::ALL, false).unwrap();
        assert_eq!(r.solution.total_capacity, 10);
        assert_eq!(r.permutations_evaluated, 18);
        let r = exact_serial(&inst(&[6, 6, 6], &[10, 7]), CriterionSet::ALL, false).unwrap();
        assert_eq!(r.solution.total_capacity, 21);
        let r = exact_serial(&inst(&[3, 3, 4], &[10, 5]), CriterionSet::only(Criterion::BestFit), false).unwrap();
        assert_eq!(r.permutations_evaluated, 6);
    }

    #[test]
    fn exact_search_refuses_large_instances() {
        let big = inst(&[1; 11], &[10]);
        assert_eq!(
            exact_serial(&big, CriterionSet::ALL, false),
            Err(BaselineError::TooLarge { m: 11, limit: PERMUTATION_LIMIT })
        );
        assert!(allperm_parallel(&big, CriterionSet::ALL, false).is_err());
    }

    #[test]
    fn parallel_matches_serial() {
        let i = inst(&[7, 2, 9, 4, 4, 13], &[20, 12, 5]);
        assert_eq!(
            allperm_parallel(&i, CriterionSet::ALL, false).unwrap(),
            exact_serial(&i, CriterionSet::ALL, false).unwrap()
        );
    }

    #[test]
    fn first_fit_online_uses_small_bins() {
        let i = inst(&[4, 4, 4], &[10, 5]);
        let s = classic_online(&i, Criterion::FirstFit);
        assert_eq!(s.total_capacity, 15);
        assert_eq!(s.bins.len(), 3);
        assert!(s.bins.iter().all(|b| b.capacity == 5));
    }

    #[test]
    fn best_fit_online_trace() {
        // 3 -> new 5-bin (2 left); 3 -> new 5-bin (2 left); 4 -> new 5-bin.
        let i = inst(&[3, 3, 4], &[10, 5]);
        let s = classic_online(&i, Criterion::BestFit);
        assert_eq!(s.total_capacity, 15);
        assert!(verify_solution(&i, &s).is_ok());
        let single = classic_online(&inst(&[2], &[10, 5]), Criterion::WorstFit);
        assert_eq!(single.total_capacity, 5);
    }
}
