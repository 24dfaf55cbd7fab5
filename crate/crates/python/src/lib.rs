//! Python bindings for `membrane_pack`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use membrane_pack::baselines;
use membrane_pack::heuristics::{Heuristic, PlanConfig};
use membrane_pack::instances::{self, Group, GroupSpec};
use membrane_pack::model::{self, Criterion};
use membrane_pack::solve::{SolutionDoc, Solver};
use membrane_pack::SolveOptions;

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A validated packing instance: item weights and strictly decreasing bin capacities.
#[pyclass(name = "Instance", module = "membrane_pack_py", frozen)]
struct PyInstance {
    inner: model::Instance,
}

#[pymethods]
impl PyInstance {
    #[new]
    fn new(weights: Vec<u64>, capacities: Vec<u64>) -> PyResult<Self> {
        model::Instance::new(weights, capacities).map(|inner| Self { inner }).map_err(value_error)
    }

    /// Generates a benchmark instance (`G1`, `G2a`..`G2e`, `G3`).
    #[staticmethod]
    #[pyo3(signature = (group, m=1000, seed=0))]
    fn generate(group: &str, m: usize, seed: u64) -> PyResult<Self> {
        let group: Group = group.parse().map_err(value_error)?;
        instances::generate_instance(&GroupSpec::new(group, m, seed)).map(|inner| Self { inner }).map_err(value_error)
    }

    /// Parses the `VSBPP 1` text format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        instances::parse_instance_str(text).map(|inner| Self { inner }).map_err(value_error)
    }

    fn to_text(&self) -> String {
        instances::format_instance(&self.inner)
    }

    #[getter]
    fn weights(&self) -> Vec<u64> {
        self.inner.weights().collect()
    }

    #[getter]
    fn capacities(&self) -> Vec<u64> {
        self.inner.bin_types().capacities().to_vec()
    }

    #[getter]
    fn total_weight(&self) -> u64 {
        self.inner.total_weight()
    }

    fn lower_bound(&self) -> u64 {
        model::lower_bound(&self.inner)
    }

    /// Optimal total capacity by set-partition enumeration (small instances only).
    fn partition_optimum(&self) -> PyResult<u64> {
        baselines::partition_optimum(&self.inner).map_err(value_error)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(m={}, capacities={:?}, total_weight={})",
            self.inner.len(),
            self.inner.bin_types().capacities(),
            self.inner.total_weight()
        )
    }
}

#[pyclass(name = "Solution", module = "membrane_pack_py", frozen)]
struct PySolution {
    doc: SolutionDoc,
    trace: Vec<String>,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn total_weight(&self) -> u64 {
        self.doc.total_weight
    }

    #[getter]
    fn total_capacity(&self) -> u64 {
        self.doc.total_capacity
    }

    #[getter]
    fn utilization(&self) -> f64 {
        self.doc.utilization
    }

    #[getter]
    fn heuristic(&self) -> &str {
        &self.doc.heuristic
    }

    #[getter]
    fn seed(&self) -> Option<u64> {
        self.doc.seed
    }

    /// `(capacity, item ids)` per used bin.
    #[getter]
    fn bins(&self) -> Vec<(u64, Vec<usize>)> {
        self.doc.bins.iter().map(|b| (b.capacity, b.items.clone())).collect()
    }

    #[getter]
    fn trace(&self) -> Vec<String> {
        self.trace.clone()
    }

    fn to_json(&self) -> String {
        self.doc.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc = serde_json::from_str(text).map_err(value_error)?;
        Ok(Self { doc, trace: Vec::new() })
    }

    /// Violations against `instance`; empty when the packing is feasible.
    fn verify(&self, instance: &PyInstance) -> Vec<String> {
        let report = model::verify_solution(&instance.inner, &self.doc.to_solution(&instance.inner));
        report.violations.iter().map(ToString::to_string).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(heuristic={}, total_capacity={}, utilization={:.3}, bins={})",
            self.doc.heuristic,
            self.doc.total_capacity,
            self.doc.utilization,
            self.doc.bins.len()
        )
    }
}

/// Solves `instance` with `h1`, `h2`, `ff`, `bf`, `wf`, `exact` or `allperm`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (instance, heuristic, seed=0, criterion=None, workers=None, trace=false, force=false))]
fn solve(
    py: Python<'_>,
    instance: &PyInstance,
    heuristic: &str,
    seed: u64,
    criterion: Option<&str>,
    workers: Option<usize>,
    trace: bool,
    force: bool,
) -> PyResult<PySolution> {
    let solver: Solver = heuristic.parse().map_err(value_error)?;
    let criterion = criterion.map(str::parse::<Criterion>).transpose().map_err(value_error)?;
    let options = SolveOptions { criterion, workers, trace, ..SolveOptions::seeded(seed) };
    let inner = &instance.inner;
    let outcome = py.detach(|| membrane_pack::solve::solve(inner, solver, &options, force)).map_err(value_error)?;
    Ok(PySolution { doc: SolutionDoc::new(&outcome.solution, solver, Some(seed)), trace: outcome.trace })
}

/// Grid layout (kernels, blocks, threads) for `m` items under `h1` or `h2`.
#[pyfunction]
fn plan_execution<'py>(py: Python<'py>, m: usize, heuristic: &str) -> PyResult<Bound<'py, PyDict>> {
    let h = match heuristic.to_ascii_lowercase().as_str() {
        "h1" => Heuristic::H1,
        "h2" => Heuristic::H2,
        other => return Err(value_error(format!("unknown heuristic `{other}` (expected h1 or h2)"))),
    };
    let plan = membrane_pack::heuristics::plan_execution(m, h, &PlanConfig::default_for(h));
    let dict = PyDict::new(py);
    dict.set_item("kernels", plan.kernels)?;
    dict.set_item("blocks", plan.blocks)?;
    dict.set_item("blocks_per_kernel", plan.blocks_per_kernel)?;
    dict.set_item("threads_per_block", plan.threads_per_block)?;
    dict.set_item("items_per_unit", plan.items_per_unit)?;
    dict.set_item("subset_size", plan.subset_size)?;
    dict.set_item("sublists", plan.sublists)?;
    Ok(dict)
}

/// Utilization `total_weight / total_capacity`, rounded half-up to three decimals.
#[pyfunction]
fn utilization(total_weight: u64, total_capacity: u64) -> PyResult<f64> {
    model::utilization(total_weight, total_capacity).map(|u| u.rounded()).map_err(value_error)
}

#[pymodule]
fn membrane_pack_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(plan_execution, m)?)?;
    m.add_function(wrap_pyfunction!(utilization, m)?)?;
    Ok(())
}
