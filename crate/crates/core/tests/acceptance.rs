//! Acceptance suite. Runs every criterion in sequence and prints one
//! PASS/FAIL line per criterion; exits nonzero if any fails.

use std::cell::RefCell;
use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use membrane_pack::baselines::{allperm_parallel, exact_serial, partition_optimum, PermSearchResult};
use membrane_pack::heuristics::{
    on_workers, plan_execution, run_h1, run_h2, thread_pack_h1, Heuristic, PlanConfig, RngStream, SolveOptions,
    StreamPath, ThreadContext,
};
use membrane_pack::instances::{generate_instance, Group, GroupSpec};
use membrane_pack::membrane::CriterionSet;
use membrane_pack::model::{lower_bound, verify_solution, Instance, Item, PackingSolution};
use membrane_pack::solve::{solve, Solver};

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn random_small_instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100)
        .map(|i| {
            let caps = if i % 2 == 0 { vec![300, 200, 100] } else { vec![10, 7] };
            let max_w = caps[0].min(20);
            let m = rng.random_range(3..=8);
            let weights = (0..m).map(|_| rng.random_range(1..=max_w)).collect();
            Instance::new(weights, caps).unwrap()
        })
        .collect()
}

fn oracle_equivalence(instances: &[Instance], serial_results: &mut Vec<PermSearchResult>) -> Outcome {
    let start = Instant::now();
    for (i, inst) in instances.iter().enumerate() {
        let serial = exact_serial(inst, CriterionSet::ALL, false).map_err(|e| e.to_string())?;
        let parallel = allperm_parallel(inst, CriterionSet::ALL, false).map_err(|e| e.to_string())?;
        let key =
            |r: &PermSearchResult| (r.solution.total_capacity, r.permutation.clone(), r.permutation_index, r.criterion);
        if key(&serial) != key(&parallel) || serial.solution != parallel.solution {
            return Err(format!("instance {i}: serial {:?} vs parallel {:?}", key(&serial), key(&parallel)));
        }
        serial_results.push(serial);
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(30) {
        return Err(format!("took {elapsed:.1?}, limit 30s"));
    }
    Ok(format!("{} instances identical in {elapsed:.1?}", instances.len()))
}

fn search_vs_optimum(instances: &[Instance], serial_results: &[PermSearchResult]) -> Outcome {
    if serial_results.len() != instances.len() {
        return Err("exact results missing".into());
    }
    let mut gaps = 0;
    for (i, (inst, serial)) in instances.iter().zip(serial_results).enumerate() {
        let exact = serial.solution.total_capacity;
        let optimum = partition_optimum(inst).map_err(|e| e.to_string())?;
        if exact < optimum {
            return Err(format!("instance {i}: exact {exact} below optimum {optimum}"));
        }
        gaps += usize::from(exact > optimum);
    }
    let hand = [(vec![3, 3, 4], vec![10, 5], 10), (vec![6, 6, 6], vec![10, 7], 21), (vec![5, 5], vec![10, 6], 10)];
    for (weights, caps, expected) in hand {
        let inst = Instance::new(weights.clone(), caps.clone()).unwrap();
        let got = (
            exact_serial(&inst, CriterionSet::ALL, false).unwrap().solution.total_capacity,
            allperm_parallel(&inst, CriterionSet::ALL, false).unwrap().solution.total_capacity,
            partition_optimum(&inst).unwrap(),
        );
        if got != (expected, expected, expected) {
            return Err(format!("{weights:?}/{caps:?}: got {got:?}, expected {expected}"));
        }
    }
    Ok(format!("exact >= optimum on {} instances ({gaps} strictly above); hand cases 10/21/10", instances.len()))
}

fn group2_totals() -> Outcome {
    let expected = [10250, 11600, 11000, 9400, 7000];
    let got: Vec<u64> =
        Group::G2.iter().map(|&g| generate_instance(&GroupSpec::new(g, 1000, 0)).unwrap().total_weight()).collect();
    if got != expected {
        return Err(format!("totals {got:?}, expected {expected:?}"));
    }
    Ok(format!("totals {got:?}"))
}

fn group2_utilization() -> Outcome {
    let start = Instant::now();
    let mut best = Vec::new();
    for &g in Group::G2.iter() {
        let inst = generate_instance(&GroupSpec::new(g, 1000, 0)).unwrap();
        let u = (1..=5)
            .map(|seed| {
                let sol = run_h2(&inst, &SolveOptions::seeded(seed));
                sol.total_weight as f64 / sol.total_capacity as f64
            })
            .fold(0.0, f64::max);
        best.push(u);
    }
    let mean = best.iter().sum::<f64>() / best.len() as f64;
    let elapsed = start.elapsed();
    let summary: Vec<String> = best.iter().map(|u| format!("{u:.3}")).collect();
    if mean < 0.80 || elapsed > Duration::from_secs(60) {
        return Err(format!("mean {mean:.3} (best {summary:?}) in {elapsed:.1?}"));
    }
    Ok(format!("mean {mean:.3}, best per variant {summary:?}, {elapsed:.1?}"))
}

fn group3_ratio() -> Outcome {
    let mut lines = Vec::new();
    for m in [5000, 10000] {
        let inst = generate_instance(&GroupSpec::new(Group::G3, m, 1)).unwrap();
        let weight = inst.total_weight() as f64;
        for (name, limit, run) in
            [("h1", 2.4, run_h1 as fn(&Instance, &SolveOptions) -> PackingSolution), ("h2", 2.2, run_h2)]
        {
            let best = (1..=3).map(|seed| run(&inst, &SolveOptions::seeded(seed)).total_capacity).min().unwrap();
            let ratio = best as f64 / weight;
            if ratio > limit {
                return Err(format!("{name} m={m}: ratio {ratio:.3} above {limit}"));
            }
            lines.push(format!("{name}@{m}={ratio:.3}"));
        }
    }
    Ok(lines.join(" "))
}

fn table1() -> Outcome {
    // (m, h1 blocks, h1 threads, h1 items/thread, h1 kernels, h2 blocks, h2 threads, h2 items/block, h2 kernels)
    let rows: [(usize, [usize; 8]); 8] = [
        (100, [1, 10, 10, 1, 20, 120, 5, 1]),
        (200, [1, 20, 10, 1, 40, 120, 5, 2]),
        (500, [1, 50, 10, 1, 100, 120, 5, 4]),
        (1000, [1, 100, 10, 1, 200, 120, 5, 7]),
        (5000, [1, 500, 10, 1, 1000, 120, 5, 32]),
        (10000, [1, 1000, 10, 1, 2000, 120, 5, 63]),
        (50000, [5, 1000, 10, 1, 10000, 120, 5, 313]),
        (100000, [10, 1000, 10, 1, 20000, 120, 5, 625]),
    ];
    for (m, expected) in rows {
        let mut got = [0; 8];
        for (k, h) in [Heuristic::H1, Heuristic::H2].into_iter().enumerate() {
            let p = plan_execution(m, h, &PlanConfig::default_for(h));
            got[k * 4..k * 4 + 4].copy_from_slice(&[p.blocks, p.threads_per_block, p.items_per_unit, p.kernels]);
        }
        if got != expected {
            return Err(format!("m={m}: got {got:?}, expected {expected:?}"));
        }
    }
    Ok("16 rows match".into())
}

fn feasibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let bin_sets: [&[u64]; 4] = [&[300, 200, 100], &[40, 30, 20, 10], &[10, 7], &[25]];
    let mut runs = 0;
    while runs < 1000 {
        let caps = bin_sets[runs % bin_sets.len()].to_vec();
        let max_w = caps[0].min(20);
        let solver = Solver::ALL[runs % Solver::ALL.len()];
        let m = match solver {
            Solver::Exact | Solver::AllPerm => rng.random_range(1..=6),
            _ => rng.random_range(1..=200),
        };
        let weights = (0..m).map(|_| rng.random_range(1..=max_w)).collect();
        let inst = Instance::new(weights, caps).unwrap();
        let seed = rng.random();
        let sol = solve(&inst, solver, &SolveOptions::seeded(seed), false).map_err(|e| e.to_string())?.solution;
        let report = verify_solution(&inst, &sol);
        let fail = |why: String| Err(format!("run {runs} ({solver}, m={m}, seed {seed}): {why}"));
        if !report.is_ok() {
            return fail(format!("{:?}", report.violations));
        }
        if sol.total_capacity < lower_bound(&inst) {
            return fail("capacity below lower bound".into());
        }
        let mut seen: Vec<usize> = sol.bins.iter().flat_map(|b| b.contents.iter().copied()).collect();
        seen.sort_unstable();
        if seen != (0..m).collect::<Vec<_>>() {
            return fail("items not partitioned".into());
        }
        if let Some(b) = sol.bins.iter().find(|b| b.load > b.capacity) {
            return fail(format!("bin load {} over {}", b.load, b.capacity));
        }
        runs += 1;
    }
    Ok(format!("{runs} runs, zero violations"))
}

fn rule5_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bin_sets: [&[u64]; 3] = [&[300, 200, 100], &[40, 30, 20, 10], &[10, 7]];
    let mut divisions = 0;
    for t in 0..200 {
        let caps = bin_sets[t % bin_sets.len()];
        let inst = Instance::new(vec![1], caps.to_vec()).unwrap();
        let max_w = caps[0].min(20);
        let subset: Vec<Item> = (0..10).map(|id| Item { id, weight: rng.random_range(1..=max_w) }).collect();
        let path = StreamPath::new(0, t / 10, t % 10);
        let options = SolveOptions::seeded(t as u64);
        let ctx = ThreadContext { path, owner: t, trace: true };
        let result = thread_pack_h1(&subset, inst.bin_types(), &options, ctx, &mut RngStream::for_thread(9, path));
        let w: u64 = subset.iter().map(|i| i.weight).sum();
        for (i, &created) in result.stats.bins_per_type.iter().enumerate() {
            let bound = 1 + (2 * w / caps[i]) as usize;
            if created > bound {
                return Err(format!("thread {t}: type {} created {created} bins, bound {bound}", caps[i]));
            }
        }
        let mut divided = HashSet::new();
        for line in result.trace.iter().filter(|l| l.contains(" rule5 ")) {
            let source = line.split(" rule5 ").nth(1).and_then(|s| s.split(" -> ").next()).unwrap_or_default();
            if !divided.insert(source.to_string()) {
                return Err(format!("thread {t}: {source} divided twice"));
            }
        }
        divisions += divided.len();
    }
    Ok(format!("200 threads within bound, {divisions} divisions, none repeated"))
}

fn determinism() -> Outcome {
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    for pair in 0..20u64 {
        let m = [100, 200, 500, 1000][pair as usize % 4];
        let inst = generate_instance(&GroupSpec::new(Group::G3, m, pair)).unwrap();
        for (name, run) in [("h1", run_h1 as fn(&Instance, &SolveOptions) -> PackingSolution), ("h2", run_h2)] {
            let base = run(&inst, &SolveOptions::seeded(pair).with_workers(1));
            for workers in [4, max] {
                let other = on_workers(Some(workers), || run(&inst, &SolveOptions::seeded(pair)));
                if other != base {
                    return Err(format!("{name} pair {pair}: {workers} workers differ from 1"));
                }
            }
        }
    }
    Ok(format!("20 pairs identical across workers {{1, 4, {max}}}"))
}

fn runtime() -> Outcome {
    let inst = generate_instance(&GroupSpec::new(Group::G3, 10000, 1)).unwrap();
    let mut lines = Vec::new();
    for (name, run) in [("h1", run_h1 as fn(&Instance, &SolveOptions) -> PackingSolution), ("h2", run_h2)] {
        let start = Instant::now();
        run(&inst, &SolveOptions::seeded(1));
        let elapsed = start.elapsed();
        if elapsed > Duration::from_secs(10) {
            return Err(format!("{name} took {elapsed:.2?}"));
        }
        lines.push(format!("{name} {elapsed:.2?}"));
    }
    Ok(lines.join(", "))
}

fn main() -> ExitCode {
    // Criteria 1 and 2 share their instances and the serial search results.
    let instances = random_small_instances();
    let serial = RefCell::new(Vec::new());
    let criteria: [(&str, Check); 10] = [
        ("oracle equivalence", Box::new(|| oracle_equivalence(&instances, &mut serial.borrow_mut()))),
        ("permutation search vs optimum", Box::new(|| search_vs_optimum(&instances, &serial.borrow()))),
        ("group 2 totals", Box::new(group2_totals)),
        ("group 2 utilization band", Box::new(group2_utilization)),
        ("group 3 capacity ratio band", Box::new(group3_ratio)),
        ("execution structure", Box::new(table1)),
        ("feasibility suite", Box::new(feasibility)),
        ("rule 5 bound", Box::new(rule5_bound)),
        ("determinism across workers", Box::new(determinism)),
        ("desk-scale runtime", Box::new(runtime)),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
