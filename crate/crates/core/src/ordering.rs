//! Handover schedules as strict total orders over flows and UAVs.
//!
//! Flows and retired UAVs share one index space `K = F ∪ U`: flow `i` is
//! element `i`, retired UAV `j` is element `n + j` (both 0-based here, 1-based
//! in exported models). A UAV must come after every flow crossing it; any
//! strict total order on `K` containing those pairs induces a handover
//! schedule, and its binary matrix `x` is a feasible point of the ILP
//!
//! ```text
//! min  Σ_{i<n≤j} T_i · P_{j-n} · x_ij
//! s.t. x_ij = 1                    for (i, j) in the dependency relation
//!      x_ij + x_ji = 1             for every pair i ≠ j
//!      x_ij + x_jk - x_ik ≤ 1      for every triple of distinct i, j, k
//!      x_ij ∈ {0, 1}
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{ReplacementInstance, Schedule};
use crate::scalar::Scalar;

/// Layout of the combined index space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CombinedIndex {
    pub n: usize,
    pub m: usize,
}

impl CombinedIndex {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    pub fn of<S>(instance: &ReplacementInstance<S>) -> Self
    where
        S: Scalar,
    {
        Self::new(instance.n(), instance.m())
    }

    pub fn len(&self) -> usize {
        self.n + self.m
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flow(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        i
    }

    pub fn uav(&self, j: usize) -> usize {
        debug_assert!(j < self.m);
        self.n + j
    }

    pub fn is_flow(&self, k: usize) -> bool {
        k < self.n
    }

    /// `F3`, `U1`, ... with 1-based numbering within each kind.
    pub fn label(&self, k: usize) -> String {
        if self.is_flow(k) {
            format!("F{}", k + 1)
        } else {
            format!("U{}", k - self.n + 1)
        }
    }
}

/// Flow-before-UAV precedence pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyRelation {
    pub index: CombinedIndex,
    pub pairs: BTreeSet<(usize, usize)>,
}

/// `(i, n + j)` for every flow `i` and UAV `j ∈ Δ_i`.
pub fn dependency_from_instance<S: Scalar>(instance: &ReplacementInstance<S>) -> DependencyRelation {
    let index = CombinedIndex::of(instance);
    let pairs = instance
        .flows()
        .iter()
        .flat_map(|f| f.retired_set.iter().map(move |&j| (index.flow(f.id), index.uav(j))))
        .collect();
    DependencyRelation { index, pairs }
}

/// Dense binary relation on the combined index space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TotalOrderMatrix {
    index: CombinedIndex,
    x: Vec<bool>,
}

impl TotalOrderMatrix {
    /// The empty relation.
    pub fn empty(index: CombinedIndex) -> Self {
        let k = index.len();
        Self { index, x: vec![false; k * k] }
    }

    /// The order in which `sequence[a]` precedes `sequence[b]` for `a < b`.
    pub fn from_sequence(index: CombinedIndex, sequence: &[usize]) -> Result<Self> {
        let k = index.len();
        let mut seen = vec![false; k];
        if sequence.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: sequence.len() });
        }
        for &e in sequence {
            if e >= k || std::mem::replace(&mut seen[e], true) {
                return Err(Error::InvalidOrder(format!("sequence is not a permutation of 0..{k}")));
            }
        }
        let mut out = Self::empty(index);
        for (a, &i) in sequence.iter().enumerate() {
            for &j in &sequence[a + 1..] {
                out.set(i, j, true);
            }
        }
        Ok(out)
    }

    pub fn index(&self) -> CombinedIndex {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.x[i * self.dim() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let k = self.dim();
        self.x[i * k + j] = value;
    }

    /// Number of elements each element precedes.
    pub fn successor_counts(&self) -> Vec<usize> {
        let k = self.dim();
        (0..k).map(|i| (0..k).filter(|&j| j != i && self.get(i, j)).count()).collect()
    }
}

/// A broken order property, with 0-based combined indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Violation {
    /// `x_ii = 1`.
    Reflexive { i: usize },
    /// `x_ij = x_ji = 0`.
    Incomparable { i: usize, j: usize },
    /// `x_ij = x_ji = 1`.
    Symmetric { i: usize, j: usize },
    /// `x_ij = x_jk = 1` but `x_ik = 0`.
    Intransitive { i: usize, j: usize, k: usize },
    /// A dependency pair is missing from the order.
    MissingDependency { i: usize, j: usize },
}

impl Violation {
    pub fn family(&self) -> &'static str {
        match self {
            Violation::Reflexive { .. } => "irreflexivity",
            Violation::Incomparable { .. } => "totality",
            Violation::Symmetric { .. } => "asymmetry",
            Violation::Intransitive { .. } => "transitivity",
            Violation::MissingDependency { .. } => "dependency",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Reflexive { i } => write!(f, "{}: x_{}_{} = 1", self.family(), i + 1, i + 1),
            Violation::Incomparable { i, j } | Violation::Symmetric { i, j } => {
                write!(f, "{}: x_{a}_{b} = x_{b}_{a}", self.family(), a = i + 1, b = j + 1)
            }
            Violation::Intransitive { i, j, k } => write!(
                f,
                "{}: x_{}_{} = x_{}_{} = 1 but x_{}_{} = 0",
                self.family(),
                i + 1,
                j + 1,
                j + 1,
                k + 1,
                i + 1,
                k + 1
            ),
            Violation::MissingDependency { i, j } => write!(f, "{}: x_{}_{} = 0", self.family(), i + 1, j + 1),
        }
    }
}

/// Every violated order property of `x`, plus missing dependency pairs.
/// Empty iff `x` is a strict total order containing `d`.
pub fn validate_total_order(x: &TotalOrderMatrix, d: &DependencyRelation) -> Result<Vec<Violation>> {
    if x.index != d.index {
        return Err(Error::DimensionMismatch { expected: d.index.len(), found: x.dim() });
    }
    let k = x.dim();
    let mut out = Vec::new();
    for i in 0..k {
        if x.get(i, i) {
            out.push(Violation::Reflexive { i });
        }
        for j in (i + 1)..k {
            match (x.get(i, j), x.get(j, i)) {
                (false, false) => out.push(Violation::Incomparable { i, j }),
                (true, true) => out.push(Violation::Symmetric { i, j }),
                _ => {}
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            if j == i || !x.get(i, j) {
                continue;
            }
            for l in 0..k {
                if l != i && l != j && x.get(j, l) && !x.get(i, l) {
                    out.push(Violation::Intransitive { i, j, k: l });
                }
            }
        }
    }
    for &(i, j) in &d.pairs {
        if !x.get(i, j) {
            out.push(Violation::MissingDependency { i, j });
        }
    }
    Ok(out)
}

/// The chain a total order spells out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Linearization {
    /// All elements, first to last.
    pub sequence: Vec<usize>,
    /// The flow subsequence.
    pub schedule: Schedule,
    /// Position of each UAV in `sequence`.
    pub uav_positions: Vec<usize>,
}

/// Reads the handover schedule off a strict total order.
///
/// In a strict total order on `k` elements the successor counts are exactly
/// `k-1, ..., 1, 0`, so sorting by descending count recovers the chain.
pub fn order_to_schedule(x: &TotalOrderMatrix) -> Result<Linearization> {
    let k = x.dim();
    let index = x.index();
    for i in 0..k {
        if x.get(i, i) {
            return Err(Error::InvalidOrder(format!("{} precedes itself", index.label(i))));
        }
        for j in (i + 1)..k {
            if x.get(i, j) == x.get(j, i) {
                return Err(Error::InvalidOrder(format!(
                    "{} and {} are not ordered exactly one way",
                    index.label(i),
                    index.label(j)
                )));
            }
        }
    }
    let counts = x.successor_counts();
    let mut sequence = vec![usize::MAX; k];
    for (e, &c) in counts.iter().enumerate() {
        let slot = k - 1 - c;
        if sequence[slot] != usize::MAX {
            return Err(Error::InvalidOrder("relation contains a cycle".into()));
        }
        sequence[slot] = e;
    }
    let flows: Vec<usize> = sequence.iter().copied().filter(|&e| index.is_flow(e)).collect();
    let mut uav_positions = vec![0; index.m];
    for (pos, &e) in sequence.iter().enumerate() {
        if !index.is_flow(e) {
            uav_positions[e - index.n] = pos;
        }
    }
    Ok(Linearization { schedule: Schedule::new(flows, index.n)?, sequence, uav_positions })
}

/// Element sequence with each UAV placed right after its last flow.
///
/// UAVs with no flows come first; UAVs released by the same flow follow it
/// in ascending id order.
pub fn canonical_sequence<S: Scalar>(instance: &ReplacementInstance<S>, schedule: &Schedule) -> Result<Vec<usize>> {
    let index = CombinedIndex::of(instance);
    let checked = Schedule::new(schedule.order().to_vec(), instance.n())?;
    let mut position = vec![0; index.n];
    for (p, &f) in checked.order().iter().enumerate() {
        position[f] = p;
    }
    let mut released: Vec<Vec<usize>> = vec![Vec::new(); index.n];
    let mut sequence = Vec::with_capacity(index.len());
    for u in instance.uavs() {
        match u.flow_set.iter().max_by_key(|&&i| position[i]) {
            Some(&last) => released[last].push(u.id),
            None => sequence.push(index.uav(u.id)),
        }
    }
    for &f in checked.order() {
        sequence.push(index.flow(f));
        sequence.extend(released[f].iter().map(|&j| index.uav(j)));
    }
    Ok(sequence)
}

/// The total order in which every UAV directly follows its last flow.
/// Its ILP objective equals the schedule's hovering energy.
pub fn schedule_to_canonical_order<S: Scalar>(
    instance: &ReplacementInstance<S>,
    schedule: &Schedule,
) -> Result<TotalOrderMatrix> {
    TotalOrderMatrix::from_sequence(CombinedIndex::of(instance), &canonical_sequence(instance, schedule)?)
}

/// The integer program for one instance.
///
/// Pair and triple constraints are implied by the index layout and produced
/// on demand rather than stored.
#[derive(Clone, Debug, PartialEq)]
pub struct IlpModel<S> {
    pub index: CombinedIndex,
    /// `(i, j, T_i · P_{j-n})` for every flow `i` and UAV element `j`.
    pub objective: Vec<(usize, usize, S)>,
    /// Pairs fixed to one, sorted.
    pub fixed: Vec<(usize, usize)>,
}

impl<S: Scalar> IlpModel<S> {
    pub fn variable_count(&self) -> usize {
        let k = self.index.len();
        k * k.saturating_sub(1)
    }

    /// All `x_ij` with `i ≠ j`, lexicographic.
    pub fn variables(&self) -> impl Iterator<Item = (usize, usize)> {
        let k = self.index.len();
        (0..k).flat_map(move |i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
    }

    /// Unordered pairs `i < j`, each constrained by `x_ij + x_ji = 1`.
    pub fn pair_equalities(&self) -> impl Iterator<Item = (usize, usize)> {
        let k = self.index.len();
        (0..k).flat_map(move |i| ((i + 1)..k).map(move |j| (i, j)))
    }

    pub fn pair_equality_count(&self) -> usize {
        let k = self.index.len();
        k * k.saturating_sub(1) / 2
    }

    /// Ordered triples of distinct indices, each constrained by
    /// `x_ij + x_jk - x_ik ≤ 1`.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, usize)> {
        let k = self.index.len();
        (0..k).flat_map(move |i| {
            (0..k)
                .filter(move |&j| j != i)
                .flat_map(move |j| (0..k).filter(move |&l| l != i && l != j).map(move |l| (i, j, l)))
        })
    }

    pub fn triple_count(&self) -> usize {
        let k = self.index.len();
        k * k.saturating_sub(1) * k.saturating_sub(2)
    }
}

/// Assembles the ILP for `instance`.
pub fn build_ilp<S: Scalar>(instance: &ReplacementInstance<S>) -> Result<IlpModel<S>> {
    let index = CombinedIndex::of(instance);
    if index.len() < 2 {
        return Err(Error::EmptyInstance);
    }
    let mut objective = Vec::with_capacity(index.n * index.m);
    for f in instance.flows() {
        for u in instance.uavs() {
            objective.push((index.flow(f.id), index.uav(u.id), f.handover_time * u.hover_power));
        }
    }
    let fixed = dependency_from_instance(instance).pairs.into_iter().collect();
    Ok(IlpModel { index, objective, fixed })
}

/// `Σ coefficient · x_ij` over the objective terms.
pub fn ilp_objective<S: Scalar>(model: &IlpModel<S>, x: &TotalOrderMatrix) -> Result<S> {
    if model.index != x.index() {
        return Err(Error::DimensionMismatch { expected: model.index.len(), found: x.dim() });
    }
    Ok(model.objective.iter().filter(|&&(i, j, _)| x.get(i, j)).map(|&(_, _, c)| c).sum())
}

fn var(i: usize, j: usize) -> String {
    format!("x_{}_{}", i + 1, j + 1)
}

/// Writes the model in CPLEX LP format.
///
/// Variables are named `x_i_j` with 1-based combined indices; every section
/// is emitted in lexicographic index order so equal models produce equal
/// bytes.
pub fn export_lp<S: Scalar, W: Write>(model: &IlpModel<S>, mut out: W) -> Result<()> {
    let idx = model.index;
    writeln!(out, "\\ UAV handover ordering: {} flows, {} retired UAVs", idx.n, idx.m)?;
    writeln!(out, "\\ objective in joules: handover time (s) x hover power (W)")?;
    writeln!(out, "Minimize")?;
    if model.objective.is_empty() {
        // LP needs at least one term; any variable with a zero weight does.
        let (i, j) = model.variables().next().expect("model has at least two elements");
        writeln!(out, " obj: 0 {}", var(i, j))?;
    }
    for (t, &(i, j, c)) in model.objective.iter().enumerate() {
        let lead = if t == 0 { " obj:" } else { " +" };
        writeln!(out, "{lead} {} {}", c.as_f64(), var(i, j))?;
    }
    writeln!(out, "Subject To")?;
    for &(i, j) in &model.fixed {
        writeln!(out, " dep_{}_{}: {} = 1", i + 1, j + 1, var(i, j))?;
    }
    for (i, j) in model.pair_equalities() {
        writeln!(out, " tot_{}_{}: {} + {} = 1", i + 1, j + 1, var(i, j), var(j, i))?;
    }
    for (i, j, k) in model.triples() {
        writeln!(out, " tr_{}_{}_{}: {} + {} - {} <= 1", i + 1, j + 1, k + 1, var(i, j), var(j, k), var(i, k))?;
    }
    writeln!(out, "Binary")?;
    for (i, j) in model.variables() {
        writeln!(out, " {}", var(i, j))?;
    }
    writeln!(out, "End")?;
    out.flush()?;
    Ok(())
}

pub fn lp_to_string<S: Scalar>(model: &IlpModel<S>) -> String {
    let mut buf = Vec::new();
    export_lp(model, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("LP output is ASCII")
}
