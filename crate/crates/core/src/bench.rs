//! Benchmark suites over the instance groups, reported as TSV.

use std::io::{self, Write};
use std::time::Instant;

use crate::heuristics::SolveOptions;
use crate::instances::{generate_instance, Group, GroupSpec, G1_SIZES, G3_SIZES};
use crate::model::utilization;
use crate::solve::{solve, Solver};

/// Seed used to generate the G1/G3 instances of the named suites.
pub const SUITE_INSTANCE_SEED: u64 = 1;

pub const TSV_HEADER: &str = "instance\tm\theuristic\tseed\ttotal_weight\ttotal_capacity\tutilization\tcapacity_ratio\tbins_used\twall_ms\terror";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchCase {
    pub spec: GroupSpec,
    pub solver: Solver,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReportRow {
    pub instance: String,
    pub m: usize,
    pub heuristic: Solver,
    pub seed: u64,
    pub total_weight: Option<u64>,
    pub total_capacity: Option<u64>,
    pub utilization: Option<f64>,
    pub capacity_ratio: Option<f64>,
    pub bins_used: Option<usize>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

/// Named suites: `smoke`, `group1`, `group2`, `group3`, `group3-small`.
pub fn suite(name: &str, seeds: u64) -> Option<Vec<BenchCase>> {
    let seeds: Vec<u64> = (1..=seeds.max(1)).collect();
    let seeds = &seeds;
    let grid = |group: Group, sizes: &[usize], solvers: &[Solver]| -> Vec<BenchCase> {
        sizes
            .iter()
            .flat_map(|&m| {
                solvers.iter().map(move |&solver| BenchCase {
                    spec: GroupSpec::new(group, m, SUITE_INSTANCE_SEED),
                    solver,
                    seeds: if solver.is_randomized() { seeds.clone() } else { vec![0] },
                })
            })
            .collect()
    };
    let heuristics = [Solver::H1, Solver::H2];
    Some(match name {
        "smoke" => grid(Group::G3, &[100], &heuristics),
        "group1" => {
            let mut cases = grid(
                Group::G1,
                &G1_SIZES,
                &[Solver::H1, Solver::H2, Solver::FirstFit, Solver::BestFit, Solver::WorstFit],
            );
            cases.extend(grid(Group::G1, &[3, 5], &[Solver::Exact]));
            cases
        }
        "group2" => Group::G2
            .iter()
            .map(|&g| BenchCase { spec: GroupSpec::new(g, 1000, 0), solver: Solver::H2, seeds: seeds.clone() })
            .collect(),
        "group3" => grid(Group::G3, &G3_SIZES, &heuristics),
        "group3-small" => grid(Group::G3, &G3_SIZES[..6], &heuristics),
        _ => return None,
    })
}

/// Runs every `(case, seed)` pair. Failures are recorded in the `error`
/// column; the run continues. Rows come back sorted by instance, solver, seed.
pub fn run_bench(cases: &[BenchCase], workers: Option<usize>) -> Vec<BenchReportRow> {
    let mut rows = Vec::new();
    for case in cases {
        let instance = generate_instance(&case.spec);
        for &seed in &case.seeds {
            let mut row = BenchReportRow {
                instance: case.spec.name(),
                m: case.spec.m,
                heuristic: case.solver,
                seed,
                total_weight: None,
                total_capacity: None,
                utilization: None,
                capacity_ratio: None,
                bins_used: None,
                wall_ms: 0.0,
                error: None,
            };
            let instance = match &instance {
                Ok(i) => i,
                Err(e) => {
                    row.error = Some(e.to_string());
                    rows.push(row);
                    continue;
                }
            };
            let options = SolveOptions { workers, ..SolveOptions::seeded(seed) };
            let start = Instant::now();
            let outcome = solve(instance, case.solver, &options, false);
            row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
            match outcome {
                Ok(out) => {
                    let sol = out.solution;
                    row.total_weight = Some(sol.total_weight);
                    row.total_capacity = Some(sol.total_capacity);
                    row.utilization = utilization(sol.total_weight, sol.total_capacity).ok().map(|u| u.to_f64());
                    row.capacity_ratio = Some(sol.total_capacity as f64 / sol.total_weight as f64);
                    row.bins_used = Some(sol.bins_used());
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| (&a.instance, a.heuristic, a.seed).cmp(&(&b.instance, b.heuristic, b.seed)));
    rows
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

pub fn write_tsv(rows: &[BenchReportRow], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{TSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{}",
            r.instance,
            r.m,
            r.heuristic,
            r.seed,
            opt(&r.total_weight),
            opt(&r.total_capacity),
            r.utilization.map(|u| format!("{u:.6}")).unwrap_or_default(),
            r.capacity_ratio.map(|c| format!("{c:.6}")).unwrap_or_default(),
            opt(&r.bins_used),
            r.wall_ms,
            r.error.as_deref().unwrap_or("").replace(['\t', '\n'], " "),
        )?;
    }
    Ok(())
}
