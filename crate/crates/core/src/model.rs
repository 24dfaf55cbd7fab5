//! Problem-domain types for variable sized bin packing: instances, bins,
//! packings, feasibility checking and the utilization metric.

use std::collections::HashMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Placement rule used when an item is assigned to an open bin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    /// Lowest creation index among fitting bins.
    #[serde(rename = "FF")]
    FirstFit,
    /// Least residual capacity among fitting bins.
    #[serde(rename = "BF")]
    BestFit,
    /// Most residual capacity among fitting bins.
    #[serde(rename = "WF")]
    WorstFit,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::FirstFit, Criterion::BestFit, Criterion::WorstFit];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::FirstFit => "FF",
            Criterion::BestFit => "BF",
            Criterion::WorstFit => "WF",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "FF" => Ok(Criterion::FirstFit),
            "BF" => Ok(Criterion::BestFit),
            "WF" => Ok(Criterion::WorstFit),
            other => Err(format!("unknown criterion `{other}` (expected FF, BF or WF)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Item {
    pub id: usize,
    pub weight: u64,
}

/// Bin capacities `B_1 > B_2 > ... > B_n > 0`, largest first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinTypeTable {
    capacities: Vec<u64>,
}

impl BinTypeTable {
    pub fn new(capacities: Vec<u64>) -> Result<Self, ModelError> {
        if capacities.is_empty() {
            return Err(ModelError::NoBinTypes);
        }
        if capacities.contains(&0) {
            return Err(ModelError::ZeroCapacity);
        }
        if capacities.windows(2).any(|w| w[0] <= w[1]) {
            return Err(ModelError::NonDecreasingCapacities(capacities));
        }
        Ok(Self { capacities })
    }

    pub fn capacities(&self) -> &[u64] {
        &self.capacities
    }

    pub fn len(&self) -> usize {
        self.capacities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capacities.is_empty()
    }

    pub fn capacity(&self, type_index: usize) -> u64 {
        self.capacities[type_index]
    }

    pub fn largest(&self) -> u64 {
        self.capacities[0]
    }

    /// Index of the smallest bin type that can hold `weight` on its own.
    pub fn smallest_fitting(&self, weight: u64) -> Option<usize> {
        // Capacities are strictly decreasing, so the last fitting index is the smallest type.
        self.capacities.iter().rposition(|&c| c >= weight)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    items: Vec<Item>,
    bin_types: BinTypeTable,
}

impl Instance {
    /// Validates raw weights and capacities; item ids are assigned by position.
    pub fn new(weights: Vec<u64>, capacities: Vec<u64>) -> Result<Self, ModelError> {
        let bin_types = BinTypeTable::new(capacities)?;
        validate_instance(RawInstance { weights, bin_types })
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn bin_types(&self) -> &BinTypeTable {
        &self.bin_types
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn weights(&self) -> impl Iterator<Item = u64> + '_ {
        self.items.iter().map(|it| it.weight)
    }

    pub fn total_weight(&self) -> u64 {
        self.weights().sum()
    }
}

/// Candidate instance before validation.
#[derive(Clone, Debug)]
pub struct RawInstance {
    pub weights: Vec<u64>,
    pub bin_types: BinTypeTable,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("bin capacities must be strictly decreasing, got {0:?}")]
    NonDecreasingCapacities(Vec<u64>),
    #[error("item {id} has weight {weight}, larger than the largest bin type {largest}")]
    OversizedItem { id: usize, weight: u64, largest: u64 },
    #[error("instance has no items")]
    EmptyInstance,
    #[error("instance has no bin types")]
    NoBinTypes,
    #[error("bin capacities must be positive")]
    ZeroCapacity,
    #[error("item {0} has zero weight")]
    ZeroWeight(usize),
    #[error("utilization undefined: capacity {capacity} is below total weight {weight}")]
    DomainError { weight: u64, capacity: u64 },
}

pub fn validate_instance(raw: RawInstance) -> Result<Instance, ModelError> {
    if raw.weights.is_empty() {
        return Err(ModelError::EmptyInstance);
    }
    let largest = raw.bin_types.largest();
    let mut items = Vec::with_capacity(raw.weights.len());
    for (id, &weight) in raw.weights.iter().enumerate() {
        if weight == 0 {
            return Err(ModelError::ZeroWeight(id));
        }
        if weight > largest {
            return Err(ModelError::OversizedItem { id, weight, largest });
        }
        items.push(Item { id, weight });
    }
    Ok(Instance { items, bin_types: raw.bin_types })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bin {
    pub type_index: usize,
    pub capacity: u64,
    pub load: u64,
    pub contents: Vec<usize>,
    /// Set once the bin has spawned a sibling; a bin divides at most once.
    pub divided: bool,
}

impl Bin {
    pub fn empty(type_index: usize, capacity: u64) -> Self {
        Self { type_index, capacity, load: 0, contents: Vec::new(), divided: false }
    }

    pub fn residual(&self) -> u64 {
        self.capacity - self.load
    }

    pub fn fits(&self, weight: u64) -> bool {
        self.load + weight <= self.capacity
    }

    pub fn push(&mut self, item: Item) {
        debug_assert!(self.fits(item.weight));
        self.load += item.weight;
        self.contents.push(item.id);
    }

    pub fn is_used(&self) -> bool {
        self.load > 0
    }
}

/// Exact used-capacity ratio, `total_weight / total_capacity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Utilization(Ratio<u64>);

impl Utilization {
    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Rounded half-up to three decimals, in thousandths.
    pub fn thousandths(&self) -> u64 {
        let (n, d) = (*self.0.numer() as u128, *self.0.denom() as u128);
        ((2 * n * 1000 + d) / (2 * d)) as u64
    }

    pub fn rounded(&self) -> f64 {
        self.thousandths() as f64 / 1000.0
    }
}

impl fmt::Display for Utilization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.thousandths();
        write!(f, "{}.{:03}", t / 1000, t % 1000)
    }
}

pub fn utilization(total_weight: u64, solution_capacity: u64) -> Result<Utilization, ModelError> {
    if total_weight == 0 || solution_capacity < total_weight {
        return Err(ModelError::DomainError { weight: total_weight, capacity: solution_capacity });
    }
    Ok(Utilization(Ratio::new(total_weight, solution_capacity)))
}

/// Sum of item weights; no feasible packing uses less capacity.
pub fn lower_bound(instance: &Instance) -> u64 {
    instance.total_weight()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackingSolution {
    pub bins: Vec<Bin>,
    /// `assignment[item id]` is the index into `bins`.
    pub assignment: Vec<usize>,
    pub total_capacity: u64,
    pub total_weight: u64,
    pub utilization: Utilization,
}

impl PackingSolution {
    /// Builds a solution from bins, dropping the empty ones.
    pub fn from_bins(instance: &Instance, bins: impl IntoIterator<Item = Bin>) -> Self {
        let bins: Vec<Bin> = bins.into_iter().filter(Bin::is_used).collect();
        let mut assignment = vec![usize::MAX; instance.len()];
        for (ordinal, bin) in bins.iter().enumerate() {
            for &id in &bin.contents {
                if let Some(slot) = assignment.get_mut(id) {
                    *slot = ordinal;
                }
            }
        }
        let total_capacity = bins.iter().map(|b| b.capacity).sum::<u64>();
        let total_weight = instance.total_weight();
        let utilization = Utilization(Ratio::new(total_weight, total_capacity.max(1)));
        Self { bins, assignment, total_capacity, total_weight, utilization }
    }

    /// Takes bins and totals as stated by an external source, without
    /// filtering or recomputing anything; used before verification.
    pub fn stated(bins: Vec<Bin>, item_count: usize, total_capacity: u64, total_weight: u64) -> Self {
        let mut assignment = vec![usize::MAX; item_count];
        for (ordinal, bin) in bins.iter().enumerate() {
            for &id in &bin.contents {
                if let Some(slot) = assignment.get_mut(id).filter(|s| **s == usize::MAX) {
                    *slot = ordinal;
                }
            }
        }
        let utilization = Utilization(Ratio::new(total_weight, total_capacity.max(1)));
        Self { bins, assignment, total_capacity, total_weight, utilization }
    }

    pub fn bins_used(&self) -> usize {
        self.bins.iter().filter(|b| b.is_used()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MissingItem(usize),
    DuplicateItem(usize),
    UnknownItem(usize),
    Overfull { bin: usize, load: u64, capacity: u64 },
    LoadMismatch { bin: usize, stated: u64, actual: u64 },
    BadBinType { bin: usize, type_index: usize, capacity: u64 },
    EmptyBin(usize),
    AssignmentMismatch { item: usize },
    CapacityMismatch { stated: u64, actual: u64 },
    WeightMismatch { stated: u64, actual: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingItem(id) => write!(f, "item {id} is not packed"),
            Violation::DuplicateItem(id) => write!(f, "item {id} is packed more than once"),
            Violation::UnknownItem(id) => write!(f, "item {id} does not exist in the instance"),
            Violation::Overfull { bin, load, capacity } => {
                write!(f, "bin {bin} holds {load}, over its capacity {capacity}")
            }
            Violation::LoadMismatch { bin, stated, actual } => {
                write!(f, "bin {bin} states load {stated} but its items weigh {actual}")
            }
            Violation::BadBinType { bin, type_index, capacity } => {
                write!(f, "bin {bin} claims type {type_index} with capacity {capacity}, which is not in the table")
            }
            Violation::EmptyBin(bin) => write!(f, "bin {bin} is empty"),
            Violation::AssignmentMismatch { item } => {
                write!(f, "assignment of item {item} disagrees with the bin contents")
            }
            Violation::CapacityMismatch { stated, actual } => {
                write!(f, "total capacity stated as {stated}, recomputed {actual}")
            }
            Violation::WeightMismatch { stated, actual } => {
                write!(f, "total weight stated as {stated}, recomputed {actual}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_solution(instance: &Instance, solution: &PackingSolution) -> VerificationReport {
    let mut violations = Vec::new();
    let m = instance.len();
    let mut seen: HashMap<usize, usize> = HashMap::with_capacity(m);

    for (ordinal, bin) in solution.bins.iter().enumerate() {
        let table = instance.bin_types().capacities();
        if table.get(bin.type_index) != Some(&bin.capacity) {
            violations.push(Violation::BadBinType { bin: ordinal, type_index: bin.type_index, capacity: bin.capacity });
        }
        if bin.contents.is_empty() {
            violations.push(Violation::EmptyBin(ordinal));
        }
        let mut actual = 0u64;
        for &id in &bin.contents {
            match instance.items().get(id) {
                Some(item) => actual += item.weight,
                None => {
                    violations.push(Violation::UnknownItem(id));
                    continue;
                }
            }
            let count = seen.entry(id).or_insert(0);
            *count += 1;
            if *count == 2 {
                violations.push(Violation::DuplicateItem(id));
            }
            if solution.assignment.get(id) != Some(&ordinal) && *count == 1 {
                violations.push(Violation::AssignmentMismatch { item: id });
            }
        }
        if actual != bin.load {
            violations.push(Violation::LoadMismatch { bin: ordinal, stated: bin.load, actual });
        }
        let load = bin.load.max(actual);
        if load > bin.capacity {
            violations.push(Violation::Overfull { bin: ordinal, load, capacity: bin.capacity });
        }
    }

    for id in 0..m {
        if !seen.contains_key(&id) {
            violations.push(Violation::MissingItem(id));
        }
    }

    let actual_capacity: u64 = solution.bins.iter().filter(|b| !b.contents.is_empty()).map(|b| b.capacity).sum();
    if actual_capacity != solution.total_capacity {
        violations.push(Violation::CapacityMismatch { stated: solution.total_capacity, actual: actual_capacity });
    }
    let actual_weight = instance.total_weight();
    if actual_weight != solution.total_weight {
        violations.push(Violation::WeightMismatch { stated: solution.total_weight, actual: actual_weight });
    }

    VerificationReport { violations }
}
