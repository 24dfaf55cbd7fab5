//! Solver dispatch and the solution JSON document.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{allperm_parallel, classic_online, exact_serial, BaselineError};
use crate::heuristics::{on_workers, run_h1_detailed, run_h2_detailed, SolveOptions};
use crate::membrane::CriterionSet;
use crate::model::{Bin, Criterion, Instance, PackingSolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Solver {
    H1,
    H2,
    FirstFit,
    BestFit,
    WorstFit,
    Exact,
    AllPerm,
}

impl Solver {
    pub const ALL: [Solver; 7] =
        [Solver::H1, Solver::H2, Solver::FirstFit, Solver::BestFit, Solver::WorstFit, Solver::Exact, Solver::AllPerm];

    pub fn name(self) -> &'static str {
        match self {
            Solver::H1 => "h1",
            Solver::H2 => "h2",
            Solver::FirstFit => "ff",
            Solver::BestFit => "bf",
            Solver::WorstFit => "wf",
            Solver::Exact => "exact",
            Solver::AllPerm => "allperm",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Solver::H1 | Solver::H2)
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Solver::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown solver `{s}` (expected h1, h2, ff, bf, wf, exact or allperm)"))
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub solution: PackingSolution,
    /// Rule trace, empty unless requested.
    pub trace: Vec<String>,
}

/// Runs `solver` on `instance`. `force` lifts the permutation search size limit.
pub fn solve(
    instance: &Instance,
    solver: Solver,
    options: &SolveOptions,
    force: bool,
) -> Result<SolveOutcome, BaselineError> {
    let plain = |solution| SolveOutcome { solution, trace: Vec::new() };
    let criteria = options.criterion.map_or(CriterionSet::ALL, CriterionSet::only);
    Ok(match solver {
        Solver::H1 => {
            let run = run_h1_detailed(instance, options);
            let trace = run.trace().map(str::to_owned).collect();
            SolveOutcome { solution: run.solution, trace }
        }
        Solver::H2 => {
            let run = run_h2_detailed(instance, options);
            let trace = run.trace().map(str::to_owned).collect();
            SolveOutcome { solution: run.solution, trace }
        }
        Solver::FirstFit => plain(classic_online(instance, Criterion::FirstFit)),
        Solver::BestFit => plain(classic_online(instance, Criterion::BestFit)),
        Solver::WorstFit => plain(classic_online(instance, Criterion::WorstFit)),
        Solver::Exact => plain(exact_serial(instance, criteria, force)?.solution),
        Solver::AllPerm => plain(on_workers(options.workers, || allperm_parallel(instance, criteria, force))?.solution),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinDoc {
    pub type_index: usize,
    pub capacity: u64,
    pub items: Vec<usize>,
}

/// Serialized solution as written by `solve` and read by `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub total_weight: u64,
    pub total_capacity: u64,
    /// Rounded half-up to three decimals.
    pub utilization: f64,
    pub bins: Vec<BinDoc>,
    pub seed: Option<u64>,
    pub heuristic: String,
}

impl SolutionDoc {
    pub fn new(solution: &PackingSolution, solver: Solver, seed: Option<u64>) -> Self {
        Self {
            total_weight: solution.total_weight,
            total_capacity: solution.total_capacity,
            utilization: solution.utilization.rounded(),
            bins: solution
                .bins
                .iter()
                .map(|b| BinDoc { type_index: b.type_index, capacity: b.capacity, items: b.contents.clone() })
                .collect(),
            seed: if solver.is_randomized() { seed } else { None },
            heuristic: solver.name().to_string(),
        }
    }

    /// Rebuilds the packing against `instance`; bin loads are recomputed from
    /// item weights so verification can flag overfull bins.
    pub fn to_solution(&self, instance: &Instance) -> PackingSolution {
        let bins: Vec<Bin> = self
            .bins
            .iter()
            .map(|b| Bin {
                type_index: b.type_index,
                capacity: b.capacity,
                load: b.items.iter().filter_map(|&id| instance.items().get(id)).map(|it| it.weight).sum(),
                contents: b.items.clone(),
                divided: false,
            })
            .collect();
        PackingSolution::stated(bins, instance.len(), self.total_capacity, self.total_weight)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}
