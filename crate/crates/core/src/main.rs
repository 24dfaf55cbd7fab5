use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use membrane_pack::bench::{run_bench, suite, write_tsv};
use membrane_pack::heuristics::{build_initial_config, plan_execution, Heuristic, PlanConfig, RngStream};
use membrane_pack::instances::{generate_instance, parse_instance, write_instance, Group, GroupSpec};
use membrane_pack::model::{verify_solution, Criterion, Instance};
use membrane_pack::solve::{solve, SolutionDoc, Solver};
use membrane_pack::SolveOptions;

#[derive(Parser)]
#[command(name = "membrane-pack", version, about = "Variable sized bin packing with membrane heuristics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark instance file.
    Gen {
        #[arg(long)]
        group: Group,
        /// Item count; ignored for the fixed G2 variants.
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Solve an instance file and print the solution as JSON.
    Solve {
        file: PathBuf,
        #[arg(long)]
        heuristic: Solver,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tag every item with this criterion (FF, BF or WF).
        #[arg(long)]
        criterion: Option<Criterion>,
        /// Print the initial configuration and the rule trace to stderr.
        #[arg(long)]
        trace: bool,
        /// Run the permutation searches beyond their size limit.
        #[arg(long)]
        force: bool,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Run a named benchmark suite and write a TSV report.
    Bench {
        /// smoke, group1, group2, group3 or group3-small
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Check a solution file against an instance.
    Verify { file: PathBuf, solution: PathBuf },
}

enum Failure {
    Usage(String),
    Invalid(String),
}

fn invalid(e: impl ToString) -> Failure {
    Failure::Invalid(e.to_string())
}

fn output_stream(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_trace(instance: &Instance, solver: Solver, options: &SolveOptions, trace: &[String]) {
    let heuristic = match solver {
        Solver::H1 => Some(Heuristic::H1),
        Solver::H2 => Some(Heuristic::H2),
        _ => None,
    };
    let mut err = io::stderr().lock();
    if let Some(h) = heuristic {
        let config = options.plan.unwrap_or_else(|| PlanConfig::default_for(h));
        let plan = plan_execution(instance.len(), h, &config);
        let skin = build_initial_config(instance, &plan, &mut RngStream::for_host(options.seed));
        let _ = write!(err, "{}", skin.dump());
    }
    for line in trace {
        let _ = writeln!(err, "{line}");
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen { group, m, seed, output } => {
            let instance = generate_instance(&GroupSpec::new(group, m, seed)).map_err(invalid)?;
            write_instance(&instance, &output).map_err(invalid)?;
        }
        Command::Solve { file, heuristic, seed, criterion, trace, force, output } => {
            let instance = parse_instance(&file).map_err(invalid)?;
            let options = SolveOptions { criterion, trace, ..SolveOptions::seeded(seed) };
            let outcome = solve(&instance, heuristic, &options, force).map_err(invalid)?;
            if trace {
                print_trace(&instance, heuristic, &options, &outcome.trace);
            }
            let doc = SolutionDoc::new(&outcome.solution, heuristic, Some(seed));
            let mut out = output_stream(output.as_deref())?;
            writeln!(out, "{}", doc.to_json()).and_then(|_| out.flush()).map_err(invalid)?;
        }
        Command::Bench { suite: name, seeds, output } => {
            let cases = suite(&name, seeds).ok_or_else(|| {
                Failure::Usage(format!(
                    "unknown suite `{name}` (expected smoke, group1, group2, group3 or group3-small)"
                ))
            })?;
            let rows = run_bench(&cases, None);
            let mut out = output_stream(output.as_deref())?;
            write_tsv(&rows, &mut out).and_then(|_| out.flush()).map_err(invalid)?;
        }
        Command::Verify { file, solution } => {
            let instance = parse_instance(&file).map_err(invalid)?;
            let text =
                std::fs::read_to_string(&solution).map_err(|e| invalid(format!("{}: {e}", solution.display())))?;
            let doc: SolutionDoc =
                serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", solution.display())))?;
            let report = verify_solution(&instance, &doc.to_solution(&instance));
            if !report.is_ok() {
                let lines: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
                return Err(Failure::Invalid(lines.join("\n")));
            }
            println!("ok: {} bins, total capacity {}", doc.bins.len(), doc.total_capacity);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
